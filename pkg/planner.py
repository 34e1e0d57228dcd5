"""
Planificador RRT# (Extend + ReduceInconsistency), variantes V0-V3 y RRT* de referencia

Cada iteración: muestreo en X_free, Extend hacia la muestra y propagación
de la nueva información por el grafo hasta que el árbol de expansión vuelve
a ser consistente para todos los vértices prometedores.
"""

import bisect
import logging
import math
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, List, Optional

import numpy as np

import planner_config
from nngraph import Graph, insert_vertex, near, nearest, steer
from pqueue import INFINITE_KEY, IndexedQueue, Key, key_lt
from space import (
    connection_gamma,
    edge_costs,
    heuristic,
    in_goal,
    make_rng,
    sample_free,
    segment_obstacle_free,
    segments_obstacle_free,
)

logger = logging.getLogger(__name__)

INF = math.inf


class InvariantViolation(RuntimeError):
    """Estado interno imposible (p. ej. g finito con lmc infinito)"""


class AlgorithmVariant(Enum):
    RRTSTAR_BASELINE = 'rrtstar'
    RRTSHARP_V0 = 'rrtsharp'
    RRTSHARP_V1 = 'rrtsharp-v1'
    RRTSHARP_V2 = 'rrtsharp-v2'
    RRTSHARP_V3 = 'rrtsharp-v3'

    @classmethod
    def parse(cls, name):
        """Acepta el valor ('rrtsharp-v2') o el nombre del enum (RRTSHARP_V2)"""
        text = str(name).strip()
        for variant in cls:
            if text.lower() == variant.value or text.upper() == variant.name:
                return variant
        raise ValueError(f"unknown algorithm '{name}'; valid names: {', '.join(valid_variant_names())}")

    @property
    def is_rrtsharp(self):
        return self is not AlgorithmVariant.RRTSTAR_BASELINE


def valid_variant_names():
    return [v.value for v in AlgorithmVariant]


class VertexCategory(Enum):
    CONSISTENT_FINITE = 'CONSISTENT_FINITE'
    CONSISTENT_INFINITE = 'CONSISTENT_INFINITE'
    INCONSISTENT_FINITE = 'INCONSISTENT_FINITE'
    INCONSISTENT_INF_G_FINITE_LMC = 'INCONSISTENT_INF_G_FINITE_LMC'


class ExtendStatus(Enum):
    EXTENDED = 'extended'
    REJECTED = 'rejected'
    COLLISION_BLOCKED = 'collision_blocked'


@dataclass(frozen=True)
class ExtendOutcome:
    status: ExtendStatus
    vertex: Optional[int] = None


@dataclass
class PlannerParams:
    eta: float = field(default_factory=planner_config.get_default_eta)
    gamma: Optional[float] = None  # None: calculado a partir del volumen libre
    sample_budget: int = field(default_factory=planner_config.get_sample_budget)
    audit: bool = False
    progress_every: int = field(default_factory=planner_config.get_progress_every)


@dataclass(frozen=True)
class InclusionRecord:
    vertex: int
    key: Key
    goal_key: Key


@dataclass(frozen=True)
class CostSample:
    iteration: int
    elapsed_s: float
    best_cost: float
    vertex_count: int


class CostHistory:
    """Muestras (iteración, tiempo, mejor coste) a lo largo de una ejecución"""

    def __init__(self):
        self.samples: List[CostSample] = []

    def __len__(self):
        return len(self.samples)

    def record(self, iteration, elapsed_s, best_cost, vertex_count):
        if self.samples and iteration <= self.samples[-1].iteration:
            raise ValueError(f"history iterations must increase ({iteration})")
        self.samples.append(CostSample(iteration, elapsed_s, best_cost, vertex_count))

    def iterations(self):
        return [s.iteration for s in self.samples]

    def costs(self):
        return [s.best_cost for s in self.samples]

    def at(self, iteration):
        for s in self.samples:
            if s.iteration == iteration:
                return s
        return None


class PlannerState:
    """Grafo, cola, escenario, RNG y contadores de una ejecución"""

    def __init__(self, scenario, variant=AlgorithmVariant.RRTSHARP_V0, params=None, rng=None):
        self.scenario = scenario
        self.variant = variant
        self.params = params or PlannerParams()
        self.rng = rng if rng is not None else make_rng(0)
        gamma = self.params.gamma if self.params.gamma is not None else connection_gamma(scenario)
        self.graph = Graph(scenario.dimension, gamma, self.params.eta)
        self.queue = IndexedQueue()
        self.iteration = 0
        self.goal_vertices: List[int] = []
        self.inclusions: List[InclusionRecord] = []
        self.extended = 0
        self.rejected = 0
        self.blocked = 0
        self._h: List[float] = []
        self._is_goal: List[bool] = []
        self._goal_best = INF
        self._goal_best_vertex: Optional[int] = None

    @property
    def gamma(self):
        return self.graph.gamma

    def h(self, v):
        return self._h[v]

    def add_vertex(self, position):
        vid = insert_vertex(self.graph, position)
        self._h.append(heuristic(position, self.scenario))
        goal = in_goal(position, self.scenario)
        self._is_goal.append(goal)
        if goal:
            self.goal_vertices.append(vid)
        return vid

    def note_goal_progress(self, v):
        """Mantiene el mínimo de min(g, lmc) sobre los vértices objetivo (solo decrece)"""
        if not self._is_goal[v]:
            return
        record = self.graph[v]
        value = min(record.g, record.lmc)
        if value == INF:
            return
        if (self._goal_best_vertex is None or value < self._goal_best
                or (value == self._goal_best and v < self._goal_best_vertex)):
            self._goal_best = value
            self._goal_best_vertex = v


@dataclass
class PlanResult:
    graph: Graph
    best_path: List[int]
    best_cost: float
    cost_history: CostHistory
    state: PlannerState = None

    def path_points(self):
        if not self.best_path:
            return np.empty((0, self.graph.dimension))
        return self.graph.positions(self.best_path)


# ---------------------------------------------------------------------------
# Procedimientos auxiliares
# ---------------------------------------------------------------------------

def compute_key(state, v):
    record = state.graph[v]
    g_min = min(record.g, record.lmc)
    return Key(g_min + state.h(v), g_min)


def classify(record):
    """Categoría a partir del par (g, lmc)"""
    g_finite = record.g < INF
    lmc_finite = record.lmc < INF
    if g_finite and lmc_finite:
        if record.g == record.lmc:
            return VertexCategory.CONSISTENT_FINITE
        return VertexCategory.INCONSISTENT_FINITE
    if not g_finite and not lmc_finite:
        return VertexCategory.CONSISTENT_INFINITE
    if lmc_finite:
        return VertexCategory.INCONSISTENT_INF_G_FINITE_LMC
    raise InvariantViolation(f"finite g={record.g} with infinite lmc")


def category_labels(state):
    return [classify(record).value for record in state.graph.vertices]


def category_counts(state):
    counts = {c: 0 for c in VertexCategory}
    for record in state.graph.vertices:
        counts[classify(record)] += 1
    return counts


def goal_key(state):
    """Clave mínima entre vértices objetivo (h = 0 dentro del objetivo)"""
    if not state.goal_vertices:
        return INFINITE_KEY
    return Key(state._goal_best, state._goal_best)


def update_queue(state, v):
    record = state.graph[v]
    if record.g != record.lmc:
        key = compute_key(state, v)
        if record.in_queue:
            state.queue.update(v, key)
        else:
            state.queue.insert(v, key)
            record.in_queue = True
    elif record.in_queue:
        state.queue.remove(v)
        record.in_queue = False


def initialize(state):
    """Inserta x_init (g = ∞, lmc = 0) y deja el árbol consistente"""
    if len(state.graph):
        raise InvariantViolation("initialize() on a non-empty graph")
    root = state.add_vertex(np.asarray(state.scenario.x_init, dtype=float))
    record = state.graph[root]
    record.lmc = 0.0
    if state.variant.is_rrtsharp:
        update_queue(state, root)
        state.note_goal_progress(root)
        reduce_inconsistency(state)
    else:
        record.g = 0.0
        state.note_goal_progress(root)
    return root


def _near_with_nearest(state, nearest_id, x_new):
    ids = near(state.graph, x_new, len(state.graph))
    pos = bisect.bisect_left(ids, nearest_id)
    if pos == len(ids) or ids[pos] != nearest_id:
        ids.insert(pos, nearest_id)
    return ids


def _steer_from_nearest(state, x_rand):
    """Nearest + Steer + colisión; devuelve (nearest_id, x_new) o un ExtendOutcome de fallo"""
    graph = state.graph
    nearest_id = nearest(graph, x_rand)
    x_nearest = graph[nearest_id].position
    x_new = steer(x_nearest, x_rand, state.params.eta)
    if np.array_equal(x_new, x_nearest):
        state.rejected += 1
        logger.debug(f"Duplicate sample at vertex {nearest_id}, skipped")
        return ExtendOutcome(ExtendStatus.REJECTED)
    if not segment_obstacle_free(x_nearest, x_new, state.scenario):
        state.blocked += 1
        logger.debug(f"Segment from vertex {nearest_id} blocked")
        return ExtendOutcome(ExtendStatus.COLLISION_BLOCKED)
    return nearest_id, x_new


def _include(state, x_new, lmc, parent, edges, g=INF):
    vid = state.add_vertex(x_new)
    record = state.graph[vid]
    record.g = g
    record.lmc = lmc
    record.parent = parent
    for u, cost in edges:
        state.graph.connect(vid, u, cost)
    state.extended += 1
    return vid


# ---------------------------------------------------------------------------
# RRT#
# ---------------------------------------------------------------------------

def extend(state, x_rand):
    """
    Extend de RRT# con la compuerta de inclusión de la variante:
    V0 siempre; V1 si hay padre; V2 si el padre es prometedor; V3 si x_new es prometedor.
    """
    steered = _steer_from_nearest(state, x_rand)
    if isinstance(steered, ExtendOutcome):
        return steered
    nearest_id, x_new = steered
    graph, scenario = state.graph, state.scenario
    variant = state.variant

    near_ids = _near_with_nearest(state, nearest_id, x_new)
    points = graph.positions(near_ids)
    free = segments_obstacle_free(x_new, points, scenario)
    costs = edge_costs(x_new, points, scenario)

    if variant is AlgorithmVariant.RRTSHARP_V0:
        k = near_ids.index(nearest_id)
        lmc = graph[nearest_id].g + float(costs[k])
        parent = nearest_id
    else:
        lmc = INF
        parent = None

    edges = []
    for k, u in enumerate(near_ids):
        if not free[k]:
            continue
        cost = float(costs[k])
        candidate = graph[u].g + cost
        if lmc > candidate:
            lmc = candidate
            parent = u
        edges.append((u, cost))

    current_goal = goal_key(state)
    new_key = Key(lmc + heuristic(x_new, scenario), lmc)
    if variant is AlgorithmVariant.RRTSHARP_V1:
        accepted = parent is not None
    elif variant is AlgorithmVariant.RRTSHARP_V2:
        accepted = parent is not None and key_lt(compute_key(state, parent), current_goal)
    elif variant is AlgorithmVariant.RRTSHARP_V3:
        accepted = key_lt(new_key, current_goal)
    else:
        accepted = True
    if not accepted:
        state.rejected += 1
        logger.debug(f"[{variant.value}] sample rejected (key {tuple(new_key)}, goal {tuple(current_goal)})")
        return ExtendOutcome(ExtendStatus.REJECTED)

    vid = _include(state, x_new, lmc, parent, edges)
    state.note_goal_progress(vid)
    update_queue(state, vid)
    if state.params.audit:
        state.inclusions.append(InclusionRecord(vid, new_key, current_goal))
    return ExtendOutcome(ExtendStatus.EXTENDED, vid)


def reduce_inconsistency(state):
    """Saca de la cola los vértices con clave ≺ goal_key y propaga su g a los vecinos"""
    graph, queue = state.graph, state.queue
    while True:
        x, top = queue.findmin()
        if x is None or not key_lt(top, goal_key(state)):
            break
        record = graph[x]
        record.g = record.lmc
        queue.remove(x)
        record.in_queue = False
        g_x = record.g
        for s, cost in record.neighbors.items():
            candidate = g_x + cost
            neighbor = graph[s]
            if neighbor.lmc > candidate:
                neighbor.parent = x
                neighbor.lmc = candidate
                state.note_goal_progress(s)
                update_queue(state, s)


# ---------------------------------------------------------------------------
# RRT* (referencia): ChooseParent + Rewire, sin cola ni propagación
# ---------------------------------------------------------------------------

def extend_rrtstar(state, x_rand):
    steered = _steer_from_nearest(state, x_rand)
    if isinstance(steered, ExtendOutcome):
        return steered
    nearest_id, x_new = steered
    graph, scenario = state.graph, state.scenario

    near_ids = _near_with_nearest(state, nearest_id, x_new)
    points = graph.positions(near_ids)
    free = segments_obstacle_free(x_new, points, scenario)
    costs = edge_costs(x_new, points, scenario)

    k = near_ids.index(nearest_id)
    parent = nearest_id
    cost_new = graph[nearest_id].g + float(costs[k])
    edges = []
    for k, u in enumerate(near_ids):
        if not free[k]:
            continue
        cost = float(costs[k])
        if graph[u].g + cost < cost_new:
            cost_new = graph[u].g + cost
            parent = u
        edges.append((u, cost))

    vid = _include(state, x_new, cost_new, parent, edges, g=cost_new)
    state.note_goal_progress(vid)

    # Rewire: sin actualizar descendientes
    for u, cost in edges:
        if u == parent:
            continue
        candidate = cost_new + cost
        neighbor = graph[u]
        if candidate < neighbor.g:
            neighbor.parent = vid
            neighbor.g = candidate
            neighbor.lmc = candidate
            state.note_goal_progress(u)
    return ExtendOutcome(ExtendStatus.EXTENDED, vid)


# ---------------------------------------------------------------------------
# Camino y bucle principal
# ---------------------------------------------------------------------------

def parent_walk(state, v):
    """Lista de vértices desde x_init hasta v siguiendo padres"""
    graph = state.graph
    path = [v]
    steps = 0
    while graph[path[-1]].parent is not None:
        path.append(graph[path[-1]].parent)
        steps += 1
        if steps > len(graph):
            raise InvariantViolation(f"parent cycle reached from vertex {v}")
    path.reverse()
    return path


def _walk_cost(state, path):
    total = 0.0
    for u, v in zip(path[:-1], path[1:]):
        total += state.graph[v].neighbors[u]
    return total


def best_path(state):
    """(vértices, coste) del vértice objetivo con menor coste estimado; ([], ∞) si no hay"""
    v = state._goal_best_vertex
    if v is None or state._goal_best == INF:
        return [], INF
    path = parent_walk(state, v)
    if path[0] != 0:
        raise InvariantViolation(f"best goal vertex {v} is not rooted at x_init")
    if state.variant.is_rrtsharp:
        return path, state._goal_best
    return path, _walk_cost(state, path)


def current_best_cost(state):
    if state.variant.is_rrtsharp:
        return state._goal_best
    return best_path(state)[1]


def _run(state, max_iterations, history_stride, callback, step):
    scenario, params = state.scenario, state.params
    history = CostHistory()
    started = time.perf_counter()
    initialize(state)
    history.record(0, time.perf_counter() - started, current_best_cost(state), len(state.graph))

    for iteration in range(1, max_iterations + 1):
        x_rand = sample_free(state.rng, scenario, params.sample_budget)
        step(state, x_rand)
        state.iteration = iteration
        if callback is not None:
            callback(state)
        if iteration % history_stride == 0 or iteration == max_iterations:
            history.record(iteration, time.perf_counter() - started,
                           current_best_cost(state), len(state.graph))
        if iteration % params.progress_every == 0:
            logger.info(f"[{state.variant.value}] iteration {iteration}: "
                        f"{len(state.graph)} vertices, best cost {current_best_cost(state):.6g}")

    path, cost = best_path(state)
    logger.info(f"[{state.variant.value}] finished {max_iterations} iterations: "
                f"{len(state.graph)} vertices, {state.graph.edge_count} edges, best cost {cost:.6g}")
    return PlanResult(graph=state.graph, best_path=path, best_cost=cost,
                      cost_history=history, state=state)


def _rrtsharp_step(state, x_rand):
    extend(state, x_rand)
    reduce_inconsistency(state)


def plan(scenario, variant, max_iterations, seed, history_stride=None, params=None,
         callback: Optional[Callable[[PlannerState], None]] = None, trial_index=0):
    """
    Ejecuta el planificador: x_init con g = ∞, lmc = 0, un ReduceInconsistency
    inicial y después {muestreo; Extend; ReduceInconsistency} max_iterations veces.
    """
    variant = variant if isinstance(variant, AlgorithmVariant) else AlgorithmVariant.parse(variant)
    if variant is AlgorithmVariant.RRTSTAR_BASELINE:
        return plan_rrtstar(scenario, max_iterations, seed, history_stride, params=params,
                            callback=callback, trial_index=trial_index)
    if max_iterations < 0:
        raise ValueError("max_iterations must be >= 0")
    stride = history_stride or planner_config.get_history_stride()
    state = PlannerState(scenario, variant, params, make_rng(seed, trial_index))
    return _run(state, max_iterations, stride, callback, _rrtsharp_step)


def plan_rrtstar(scenario, max_iterations, seed, history_stride=None, params=None,
                 callback: Optional[Callable[[PlannerState], None]] = None, trial_index=0):
    """RRT* con el mismo radio Near, steering, muestreo y modelo de coste"""
    if max_iterations < 0:
        raise ValueError("max_iterations must be >= 0")
    stride = history_stride or planner_config.get_history_stride()
    state = PlannerState(scenario, AlgorithmVariant.RRTSTAR_BASELINE, params, make_rng(seed, trial_index))
    return _run(state, max_iterations, stride, callback, extend_rrtstar)
