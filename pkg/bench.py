"""
Banco de pruebas Monte Carlo
Ensayos con semillas emparejadas, agregación media/varianza sobre una rejilla
de iteraciones, cociente de tiempos frente a RRT* y oráculos de verificación.
"""

import csv
import heapq
import logging
import math
import statistics
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import planner_config
from planner import (
    AlgorithmVariant,
    CostHistory,
    VertexCategory,
    classify,
    compute_key,
    plan,
)
from pqueue import INFINITE_KEY, key_lt
from space import SamplingBudgetExhausted, in_goal, straight_line_bound

logger = logging.getLogger(__name__)

INF = math.inf

STATS_HEADER = ['variant', 'iteration', 'mean_cost', 'variance', 'unsolved_fraction', 'mean_elapsed_s']
NORMALIZED_HEADER = ['variant', 'iteration', 'mean_normalized_cost', 'normalized_variance']
TIME_RATIO_HEADER = ['variant', 'iteration', 'time_ratio']

__all__ = ['CostHistory', 'TrialResult', 'StatsRow', 'TrialStats', 'MonteCarloRunner',
           'run_trials', 'compare_variants', 'summarize', 'ratios_from_results', 'aggregate',
           'iteration_grid', 'dijkstra', 'Violation', 'ConsistencyReport', 'recompute_goal_key',
           'verify_consistency', 'verify_shortest_paths', 'verify_variant_invariants', 'time_ratio',
           'write_stats_csv', 'write_normalized_csv', 'write_time_ratio_csv']


@dataclass
class TrialResult:
    variant: AlgorithmVariant
    trial: int
    history: Optional[CostHistory] = None
    best_cost: float = INF
    vertex_count: int = 0
    error: Optional[str] = None

    @property
    def failed(self):
        return self.error is not None


@dataclass
class StatsRow:
    iteration: int
    mean_cost: float
    variance: float
    unsolved_fraction: float
    mean_elapsed_s: float
    trial_count: int
    mean_normalized_cost: Optional[float] = None
    normalized_variance: Optional[float] = None


@dataclass
class TrialStats:
    variant: AlgorithmVariant
    rows: List[StatsRow] = field(default_factory=list)
    trial_count: int = 0
    failed_trials: int = 0
    vertex_counts: List[int] = field(default_factory=list)

    def row(self, iteration):
        for r in self.rows:
            if r.iteration == iteration:
                return r
        return None


def iteration_grid(max_iterations, stride):
    return list(range(0, max_iterations + 1, stride))


def _run_trial(job):
    """Un ensayo; a nivel de módulo para poder enviarlo a otro proceso"""
    scenario, variant, trial, max_iterations, base_seed, stride, params = job
    try:
        result = plan(scenario, variant, max_iterations, base_seed, stride,
                      params=params, trial_index=trial)
    except SamplingBudgetExhausted as e:
        logger.warning(f"[{variant.value}] trial {trial} failed: {e}")
        return TrialResult(variant, trial, error=str(e))
    return TrialResult(variant, trial, history=result.cost_history,
                       best_cost=result.best_cost, vertex_count=len(result.graph))


class MonteCarloRunner:
    """
    Ejecuta ensayos emparejados: el ensayo t de cualquier variante usa la
    secuencia de muestras derivada de (base_seed, t).
    """

    def __init__(self, scenario, max_iterations, base_seed=0, history_stride=None,
                 params=None, workers=None):
        self.scenario = scenario
        self.max_iterations = int(max_iterations)
        self.base_seed = int(base_seed)
        self.history_stride = history_stride or planner_config.get_history_stride()
        self.params = params
        self.workers = workers or planner_config.get_worker_count()

    def run(self, variants, trials, trial_order=None):
        if trials < 1:
            raise ValueError("trials must be >= 1")
        order = list(trial_order) if trial_order is not None else list(range(trials))
        jobs = [
            (self.scenario, variant, t, self.max_iterations, self.base_seed,
             self.history_stride, self.params)
            for variant in variants for t in order
        ]
        logger.info(f"Running {len(jobs)} trials ({len(variants)} variants x {trials}) "
                    f"with {self.workers} worker(s)")
        if self.workers > 1:
            with ProcessPoolExecutor(max_workers=self.workers) as pool:
                results = list(pool.map(_run_trial, jobs))
        else:
            results = [_run_trial(job) for job in jobs]

        by_variant = defaultdict(list)
        for r in results:
            by_variant[r.variant].append(r)
        for v in by_variant:
            by_variant[v].sort(key=lambda r: r.trial)
        return by_variant


def aggregate(variant, results, grid, optimum=None):
    """
    Media y varianza (poblacional) del mejor coste por punto de la rejilla.
    Solo entran ensayos con coste finito; la fracción sin solución va aparte.
    """
    stats = TrialStats(variant)
    completed = [r for r in results if not r.failed]
    stats.trial_count = len(completed)
    stats.failed_trials = len(results) - len(completed)
    stats.vertex_counts = [r.vertex_count for r in completed]

    for iteration in grid:
        samples = [r.history.at(iteration) for r in completed]
        samples = [s for s in samples if s is not None]
        if not samples:
            continue
        finite = [s.best_cost for s in samples if s.best_cost < INF]
        elapsed = statistics.fmean(s.elapsed_s for s in samples)
        unsolved = (len(samples) - len(finite)) / len(samples)
        if finite:
            mean_cost = statistics.fmean(finite)
            variance = statistics.pvariance(finite)
        else:
            mean_cost, variance = INF, math.nan
        row = StatsRow(iteration, mean_cost, variance, unsolved, elapsed, len(samples))
        if optimum and finite:
            normalized = [c / optimum for c in finite]
            row.mean_normalized_cost = statistics.fmean(normalized)
            row.normalized_variance = statistics.pvariance(normalized)
        stats.rows.append(row)
    return stats


def _as_variants(variants):
    return [v if isinstance(v, AlgorithmVariant) else AlgorithmVariant.parse(v) for v in variants]


def summarize(scenario, results, variants, grid):
    """variant -> TrialStats; coste normalizado solo en escenarios sin zonas"""
    optimum = straight_line_bound(scenario) if not scenario.zones else None
    return {v: aggregate(v, results[v], grid, optimum) for v in variants}


def ratios_from_results(results, variants, grid):
    """
    Tiempo medio de cada variante / tiempo medio de RRT* en cada punto de la
    rejilla con iteración > 0. `results` debe incluir el RRT* de referencia.
    """
    baseline = AlgorithmVariant.RRTSTAR_BASELINE

    def mean_elapsed(variant, iteration):
        values = [r.history.at(iteration).elapsed_s for r in results[variant]
                  if not r.failed and r.history.at(iteration) is not None]
        return statistics.fmean(values) if values else math.nan

    ratios = {}
    for variant in variants:
        series = []
        for iteration in grid:
            if iteration <= 0:
                continue
            base = mean_elapsed(baseline, iteration)
            if not base > 0:
                continue
            series.append((iteration, mean_elapsed(variant, iteration) / base))
        ratios[variant] = series
    return ratios


def run_trials(scenario, variants, trials, max_iterations, base_seed=0, history_stride=None,
               params=None, workers=None):
    """variant -> TrialStats sobre la rejilla de múltiplos de history_stride"""
    runner = MonteCarloRunner(scenario, max_iterations, base_seed, history_stride, params, workers)
    variants = _as_variants(variants)
    results = runner.run(variants, trials)
    return summarize(scenario, results, variants, iteration_grid(max_iterations, runner.history_stride))


def time_ratio(scenario, variants, trials, max_iterations, base_seed=0, history_stride=None,
               params=None):
    """Cociente de tiempos frente a RRT*, siempre en serie en un solo worker"""
    return compare_variants(scenario, variants, trials, max_iterations, base_seed,
                            history_stride, params, workers=1)[1]


def compare_variants(scenario, variants, trials, max_iterations, base_seed=0, history_stride=None,
                     params=None, workers=None):
    """
    Una sola tanda de ensayos para estadísticas y cociente de tiempos.
    El RRT* de referencia se ejecuta aunque no esté en `variants`.
    Devuelve (variant -> TrialStats, variant -> [(iteration, ratio)]).
    """
    runner = MonteCarloRunner(scenario, max_iterations, base_seed, history_stride, params, workers)
    variants = _as_variants(variants)
    baseline = AlgorithmVariant.RRTSTAR_BASELINE
    to_run = variants if baseline in variants else variants + [baseline]
    if runner.workers > 1:
        logger.warning(f"Time ratios measured with {runner.workers} concurrent workers")
    results = runner.run(to_run, trials)
    grid = iteration_grid(max_iterations, runner.history_stride)
    return summarize(scenario, results, variants, grid), ratios_from_results(results, variants, grid)


# ---------------------------------------------------------------------------
# Oráculos
# ---------------------------------------------------------------------------

def dijkstra(graph, source=0):
    """Distancias exactas desde source usando solo adyacencia y costes almacenados"""
    dist = {v: INF for v in range(len(graph))}
    dist[source] = 0.0
    heap = [(0.0, source)]
    done = set()
    while heap:
        d, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        for v, cost in graph[u].neighbors.items():
            nd = d + cost
            if nd < dist[v]:
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return dist


@dataclass(frozen=True)
class Violation:
    vertex: int
    reason: str


@dataclass
class ConsistencyReport:
    violations: List[Violation] = field(default_factory=list)

    @property
    def ok(self):
        return not self.violations

    @property
    def vertices(self):
        return sorted({v.vertex for v in self.violations})

    def extend(self, other):
        self.violations.extend(other.violations)
        return self


def recompute_goal_key(state):
    """Clave mínima entre vértices dentro del objetivo, recalculada desde cero"""
    best = INFINITE_KEY
    for v, record in enumerate(state.graph.vertices):
        if in_goal(record.position, state.scenario):
            key = compute_key(state, v)
            if key_lt(key, best):
                best = key
    return best


def verify_consistency(state):
    """
    Árbol consistente: todo vértice con clave ≺ goal_key tiene g = lmc, y la
    cola contiene exactamente los vértices inconsistentes con alguna estimación finita.
    """
    report = ConsistencyReport()
    goal = recompute_goal_key(state)
    queue = state.queue
    for v, record in enumerate(state.graph.vertices):
        inconsistent = record.g != record.lmc
        if inconsistent and key_lt(compute_key(state, v), goal):
            report.violations.append(Violation(v, 'promising vertex is inconsistent'))
        queued = v in queue
        if queued != record.in_queue:
            report.violations.append(Violation(v, 'in_queue flag disagrees with queue'))
        finite = record.g < INF or record.lmc < INF
        if finite and queued != inconsistent:
            report.violations.append(Violation(v, 'queue membership does not match inconsistency'))
        if not finite and queued:
            report.violations.append(Violation(v, 'vertex with infinite estimates is queued'))
    return report


def verify_shortest_paths(state, tol=1e-9):
    """Oráculo de Dijkstra y lmc = g(padre) + c(padre, v) para los vértices prometedores"""
    report = ConsistencyReport()
    goal = recompute_goal_key(state)
    dist = dijkstra(state.graph, 0)
    graph = state.graph
    for v, record in enumerate(graph.vertices):
        if not key_lt(compute_key(state, v), goal):
            continue
        d = dist[v]
        if not (record.g == d or abs(record.g - d) <= tol):
            report.violations.append(Violation(v, f'g={record.g!r} differs from shortest path {d!r}'))
        if record.parent is not None:
            expected = graph[record.parent].g + record.neighbors[record.parent]
            if record.lmc != expected:
                report.violations.append(Violation(v, f'lmc={record.lmc!r} does not match parent ({expected!r})'))
    return report


def verify_variant_invariants(state):
    """V1: ningún vértice consistente con clave infinita. V3: toda inclusión fue prometedora"""
    report = ConsistencyReport()
    if state.variant is AlgorithmVariant.RRTSHARP_V1:
        for v, record in enumerate(state.graph.vertices):
            if classify(record) is VertexCategory.CONSISTENT_INFINITE:
                report.violations.append(Violation(v, 'V1 graph holds a consistent vertex with infinite key'))
    if state.variant is AlgorithmVariant.RRTSHARP_V3:
        for entry in state.inclusions:
            if not key_lt(entry.key, entry.goal_key):
                report.violations.append(Violation(entry.vertex, 'V3 included a non-promising vertex'))
    return report


# ---------------------------------------------------------------------------
# Salida CSV
# ---------------------------------------------------------------------------

def _fmt(value):
    if value is None:
        return ''
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_stats_csv(stats_by_variant: Dict[AlgorithmVariant, TrialStats], path):
    with open(path, 'w', newline='', encoding='utf-8') as f:
        writer = csv.writer(f)
        writer.writerow(STATS_HEADER)
        for variant, stats in stats_by_variant.items():
            for r in stats.rows:
                writer.writerow([variant.value, r.iteration, _fmt(r.mean_cost), _fmt(r.variance),
                                 _fmt(r.unsolved_fraction), _fmt(r.mean_elapsed_s)])


def write_normalized_csv(stats_by_variant, path):
    with open(path, 'w', newline='', encoding='utf-8') as f:
        writer = csv.writer(f)
        writer.writerow(NORMALIZED_HEADER)
        for variant, stats in stats_by_variant.items():
            for r in stats.rows:
                if r.normalized_variance is None:
                    continue
                writer.writerow([variant.value, r.iteration, _fmt(r.mean_normalized_cost),
                                 _fmt(r.normalized_variance)])


def write_time_ratio_csv(ratios, path):
    with open(path, 'w', newline='', encoding='utf-8') as f:
        writer = csv.writer(f)
        writer.writerow(TIME_RATIO_HEADER)
        for variant, series in ratios.items():
            for iteration, ratio in series:
                writer.writerow([variant.value, iteration, _fmt(ratio)])
