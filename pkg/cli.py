"""
Línea de comandos del planificador
    python cli.py run --scenario scenarios/type1_2d.json --algo rrtsharp --iters 5000 --out out/
    python cli.py compare --scenario ... --algo rrtsharp,rrtsharp-v3,rrtstar --trials 10 --out out/
    python cli.py check --scenario ... --algo rrtsharp-v2 --iters 2000 --stride 100 --out out/

Códigos de salida: 0 ok, 1 escenario o argumentos inválidos, 2 muestreo agotado,
3 invariante violado.
"""

import argparse
import csv
import logging
import os
import sys
from dataclasses import dataclass, field
from typing import List, Optional

import planner_config
from bench import (
    compare_variants,
    recompute_goal_key,
    verify_consistency,
    verify_shortest_paths,
    verify_variant_invariants,
    write_normalized_csv,
    write_stats_csv,
    write_time_ratio_csv,
)
from nngraph import dump_graph
from planner import (
    AlgorithmVariant,
    InvariantViolation,
    PlannerParams,
    VertexCategory,
    category_counts,
    category_labels,
    plan,
)
from pqueue import QueueContractError
from space import SamplingBudgetExhausted, ScenarioError, load_scenario

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_SAMPLING = 2
EXIT_INVARIANT = 3


class _ArgumentParser(argparse.ArgumentParser):
    """Errores de argumentos con código 1 (el 2 es para muestreo agotado)"""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


class CheckFailed(Exception):
    def __init__(self, iteration, report, snapshot):
        self.iteration = iteration
        self.report = report
        self.snapshot = snapshot
        super().__init__(f"{len(report.violations)} invariant violation(s) at iteration {iteration}")


@dataclass
class RunConfig:
    scenario_path: str
    algorithm: AlgorithmVariant
    iterations: int
    seed: int = 0
    eta: float = field(default_factory=planner_config.get_default_eta)
    gamma_override: Optional[float] = None
    history_stride: int = field(default_factory=planner_config.get_history_stride)
    output_dir: str = '.'
    snapshot_at: List[int] = field(default_factory=list)

    def __post_init__(self):
        if self.iterations < 0:
            raise ValueError("--iters must be >= 0")
        if not self.eta > 0:
            raise ValueError("--eta must be > 0")
        if self.gamma_override is not None and not self.gamma_override > 0:
            raise ValueError("--gamma must be > 0")
        if self.history_stride < 1:
            raise ValueError("--stride must be >= 1")
        if any(k < 1 for k in self.snapshot_at):
            raise ValueError("--snapshot iterations must be >= 1")
        self.snapshot_at = sorted(set(self.snapshot_at))

    def params(self, audit=False):
        return PlannerParams(eta=self.eta, gamma=self.gamma_override, audit=audit)


def _fmt(value):
    return repr(float(value))


def _safe_labels(state):
    try:
        return category_labels(state)
    except InvariantViolation:
        return ['INVALID'] * len(state.graph)


def _write_lines(path, lines):
    with open(path, 'w', encoding='utf-8', newline='') as f:
        f.write(''.join(line + '\n' for line in lines))


# ---------------------------------------------------------------------------
# Subcomandos
# ---------------------------------------------------------------------------

def cmd_run(config):
    """Una ejecución: history.csv, timing.csv, path.txt, tree_<k>.txt y categories.csv"""
    scenario = load_scenario(config.scenario_path)
    wanted = set(config.snapshot_at)
    snapshots = {}
    census = []

    def on_iteration(state):
        if state.iteration in wanted:
            snapshots[state.iteration] = dump_graph(state.graph, category_labels(state))
            census.append((state.iteration, category_counts(state)))

    result = plan(scenario, config.algorithm, config.iterations, config.seed,
                  config.history_stride, params=config.params(), callback=on_iteration)
    skipped = sorted(wanted - set(snapshots))
    if skipped:
        logger.warning(f"Snapshots beyond --iters ignored: {skipped}")

    out = config.output_dir
    os.makedirs(out, exist_ok=True)
    samples = result.cost_history.samples
    _write_lines(os.path.join(out, 'history.csv'),
                 ['iteration,best_cost,vertex_count'] +
                 [f"{s.iteration},{_fmt(s.best_cost)},{s.vertex_count}" for s in samples])
    _write_lines(os.path.join(out, 'timing.csv'),
                 ['iteration,elapsed_s'] + [f"{s.iteration},{_fmt(s.elapsed_s)}" for s in samples])
    _write_lines(os.path.join(out, 'path.txt'),
                 [', '.join(_fmt(c) for c in p) for p in result.path_points()])
    for k, text in snapshots.items():
        with open(os.path.join(out, f'tree_{k}.txt'), 'w', encoding='utf-8', newline='') as f:
            f.write(text)
    if census:
        with open(os.path.join(out, 'categories.csv'), 'w', encoding='utf-8', newline='') as f:
            writer = csv.writer(f)
            writer.writerow(['iteration'] + [c.value for c in VertexCategory])
            for iteration, counts in census:
                writer.writerow([iteration] + [counts[c] for c in VertexCategory])

    print(f"{config.algorithm.value}: best cost {result.best_cost:.6g} after {config.iterations} "
          f"iterations ({len(result.graph)} vertices, {len(result.best_path)} path vertices)")
    return EXIT_OK


def cmd_compare(config, variants, trials):
    """Ensayos emparejados de varias variantes: stats.csv, time_ratio.csv, stats_normalized.csv"""
    scenario = load_scenario(config.scenario_path)
    params = config.params()
    stats, ratios = compare_variants(scenario, variants, trials, config.iterations, config.seed,
                                     config.history_stride, params,
                                     workers=planner_config.get_worker_count())

    out = config.output_dir
    os.makedirs(out, exist_ok=True)
    write_stats_csv(stats, os.path.join(out, 'stats.csv'))
    write_time_ratio_csv(ratios, os.path.join(out, 'time_ratio.csv'))
    write_normalized_csv(stats, os.path.join(out, 'stats_normalized.csv'))
    with open(os.path.join(out, 'vertex_counts.csv'), 'w', encoding='utf-8', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(['variant', 'trial', 'vertex_count'])
        for variant, entry in stats.items():
            for t, count in enumerate(entry.vertex_counts):
                writer.writerow([variant.value, t, count])

    for variant, entry in stats.items():
        last = entry.rows[-1] if entry.rows else None
        mean = f"{last.mean_cost:.6g}" if last else 'n/a'
        print(f"{variant.value}: mean cost {mean} over {entry.trial_count} trials"
              f" ({entry.failed_trials} failed)")
    return EXIT_OK


def cmd_check(config, inject_fault=False):
    """Ejecuta el planificador verificando invariantes cada `stride` iteraciones"""
    scenario = load_scenario(config.scenario_path)
    variant = config.algorithm
    if not variant.is_rrtsharp:
        logger.info("RRT* keeps stale costs after rewiring; only the queue checks apply")
    fault = {'pending': inject_fault}
    checks = {'count': 0}

    def verify(state):
        if fault['pending']:
            state.graph[0].g += 1.0
            fault['pending'] = False
            logger.warning(f"Fault injected into vertex 0 at iteration {state.iteration}")
        report = verify_consistency(state)
        if variant.is_rrtsharp:
            report.extend(verify_shortest_paths(state))
            report.extend(verify_variant_invariants(state))
        checks['count'] += 1
        if not report.ok:
            raise CheckFailed(state.iteration, report, dump_graph(state.graph, _safe_labels(state)))

    def on_iteration(state):
        if state.iteration % config.history_stride == 0:
            verify(state)

    try:
        result = plan(scenario, variant, config.iterations, config.seed, config.history_stride,
                      params=config.params(audit=True), callback=on_iteration)
        if config.iterations % config.history_stride != 0 or config.iterations == 0:
            verify(result.state)
    except CheckFailed as e:
        os.makedirs(config.output_dir, exist_ok=True)
        path = os.path.join(config.output_dir, f'violation_{e.iteration}.txt')
        with open(path, 'w', encoding='utf-8', newline='') as f:
            f.write(e.snapshot)
        for v in e.report.violations:
            logger.error(f"vertex {v.vertex}: {v.reason}")
        print(f"{variant.value}: {e}; snapshot written to {path}", file=sys.stderr)
        return EXIT_INVARIANT

    print(f"{variant.value}: {checks['count']} checks passed, goal key "
          f"{tuple(recompute_goal_key(result.state))}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Argumentos
# ---------------------------------------------------------------------------

def _int_list(text):
    try:
        return [int(part) for part in text.split(',') if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got '{text}'")


def build_parser():
    parser = _ArgumentParser(prog='cli.py', description="RRT# motion planner and benchmark")
    sub = parser.add_subparsers(dest='command', required=True, parser_class=_ArgumentParser)

    def common(p, algo_help):
        p.add_argument('--scenario', required=True, help="scenario JSON file")
        p.add_argument('--algo', default=AlgorithmVariant.RRTSHARP_V0.value, help=algo_help)
        p.add_argument('--iters', type=int, default=1000, help="planner iterations")
        p.add_argument('--seed', type=int, default=0)
        p.add_argument('--eta', type=float, default=planner_config.get_default_eta(),
                       help="steering radius")
        p.add_argument('--gamma', type=float, default=None,
                       help="connection constant (default: from free-space volume)")
        p.add_argument('--stride', type=int, default=planner_config.get_history_stride(),
                       help="history / check stride in iterations")
        p.add_argument('--out', default='.', help="output directory")

    names = ', '.join(v.value for v in AlgorithmVariant)
    run = sub.add_parser('run', help="single planning run")
    common(run, f"one of: {names}")
    run.add_argument('--snapshot', type=_int_list, action='append', default=None,
                     help="iterations at which to dump the graph (comma-separated)")

    compare = sub.add_parser('compare', help="Monte Carlo comparison of variants")
    common(compare, f"comma-separated list of: {names}")
    compare.set_defaults(algo=','.join(v.value for v in AlgorithmVariant))
    compare.add_argument('--trials', type=int, default=10)

    check = sub.add_parser('check', help="run with invariant verification")
    common(check, f"one of: {names}")
    check.add_argument('--inject-fault', action='store_true', help=argparse.SUPPRESS)
    return parser


def _config_from_args(args, algorithm):
    snapshots = [k for chunk in (getattr(args, 'snapshot', None) or []) for k in chunk]
    return RunConfig(
        scenario_path=args.scenario,
        algorithm=algorithm,
        iterations=args.iters,
        seed=args.seed,
        eta=args.eta,
        gamma_override=args.gamma,
        history_stride=args.stride,
        output_dir=args.out,
        snapshot_at=snapshots,
    )


def _resolve(args):
    """Valida los argumentos; ValueError con el mensaje para el usuario"""
    if args.command == 'compare':
        variants = [AlgorithmVariant.parse(name) for name in args.algo.split(',') if name.strip()]
        if not variants:
            raise ValueError("--algo needs at least one variant")
        if args.trials < 1:
            raise ValueError("--trials must be >= 1")
        return _config_from_args(args, variants[0]), variants
    variant = AlgorithmVariant.parse(args.algo)
    return _config_from_args(args, variant), [variant]


def main(argv=None):
    args = build_parser().parse_args(argv)
    planner_config.setup_logging()

    try:
        config, variants = _resolve(args)
    except ValueError as e:
        logger.error(f"Invalid arguments: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE

    try:
        if args.command == 'compare':
            return cmd_compare(config, variants, args.trials)
        if args.command == 'check':
            return cmd_check(config, inject_fault=args.inject_fault)
        return cmd_run(config)
    except ScenarioError as e:
        logger.error(f"Invalid scenario: {e}")
        print(f"error: invalid scenario: {e}", file=sys.stderr)
        return EXIT_USAGE
    except SamplingBudgetExhausted as e:
        logger.error(f"Sampling failed: {e}", exc_info=True)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_SAMPLING
    except (InvariantViolation, QueueContractError) as e:
        logger.error(f"Invariant violated: {e}", exc_info=True)
        print(f"error: invariant violated: {e}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == '__main__':
    sys.exit(main())
