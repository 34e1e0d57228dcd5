"""
Pruebas del CLI: ficheros de salida, determinismo y códigos de salida
"""

import csv
import json
import os

import pytest

import bench
import cli
import planner_config
from cli import EXIT_INVARIANT, EXIT_OK, EXIT_SAMPLING, EXIT_USAGE, main
from nngraph import parse_graph_dump

HERE = os.path.dirname(os.path.abspath(__file__))
BUNDLED = ['type1_2d', 'type2_2d', 'type3_2d', 'type4_2d', 'type1_5d', 'type2_5d']


def _scenario_path(name):
    return os.path.join(HERE, 'scenarios', f'{name}.json')


def _read(path):
    with open(path, encoding='utf-8') as f:
        return f.read()


def test_run_writes_outputs(tmp_path):
    out = tmp_path / 'run'
    code = main(['run', '--scenario', _scenario_path('type2_2d'), '--algo', 'rrtsharp-v1',
                 '--iters', '200', '--stride', '50', '--snapshot', '100,200', '--out', str(out)])
    assert code == EXIT_OK
    history = _read(out / 'history.csv').splitlines()
    assert history[0] == 'iteration,best_cost,vertex_count'
    assert [line.split(',')[0] for line in history[1:]] == ['0', '50', '100', '150', '200']
    assert _read(out / 'timing.csv').splitlines()[0] == 'iteration,elapsed_s'
    assert (out / 'path.txt').exists()

    dump = parse_graph_dump(_read(out / 'tree_200.txt'))
    vertex_count = int(history[-1].split(',')[2])
    assert len(dump.vertices) == vertex_count
    assert dump.vertices[0]['parent'] == -1
    assert (out / 'tree_100.txt').exists()

    with open(out / 'categories.csv', encoding='utf-8') as f:
        rows = list(csv.DictReader(f))
    assert [r['iteration'] for r in rows] == ['100', '200']
    last = rows[-1]
    total = sum(int(v) for k, v in last.items() if k != 'iteration')
    assert total == vertex_count
    assert last['CONSISTENT_INFINITE'] == '0'


def test_zero_iterations(tmp_path):
    code = main(['run', '--scenario', _scenario_path('type1_2d'), '--iters', '0', '--out', str(tmp_path)])
    assert code == EXIT_OK
    assert _read(tmp_path / 'history.csv') == 'iteration,best_cost,vertex_count\n0,inf,1\n'
    assert _read(tmp_path / 'path.txt') == ''


@pytest.mark.parametrize('name', BUNDLED)
def test_history_is_byte_identical(tmp_path, name):
    args = ['run', '--scenario', _scenario_path(name), '--algo', 'rrtsharp-v3',
            '--iters', '300', '--seed', '7', '--stride', '25']
    assert main(args + ['--out', str(tmp_path / 'a')]) == EXIT_OK
    assert main(args + ['--out', str(tmp_path / 'b')]) == EXIT_OK
    assert (tmp_path / 'a' / 'history.csv').read_bytes() == (tmp_path / 'b' / 'history.csv').read_bytes()
    assert (tmp_path / 'a' / 'path.txt').read_bytes() == (tmp_path / 'b' / 'path.txt').read_bytes()


def test_path_file_reaches_goal(tmp_path):
    code = main(['run', '--scenario', _scenario_path('type1_2d'), '--iters', '1500', '--seed', '3',
                 '--out', str(tmp_path)])
    assert code == EXIT_OK
    lines = _read(tmp_path / 'path.txt').splitlines()
    first = [float(c) for c in lines[0].split(',')]
    last = [float(c) for c in lines[-1].split(',')]
    assert first == [1.0, 1.0]
    assert all(8.5 <= c <= 9.5 for c in last)


def test_malformed_scenario(tmp_path, capsys):
    path = tmp_path / 'bad.json'
    doc = json.loads(_read(_scenario_path('type1_2d')))
    doc['goal'] = {'min': [8.5, 8.5]}
    path.write_text(json.dumps(doc), encoding='utf-8')
    code = main(['run', '--scenario', str(path), '--out', str(tmp_path)])
    assert code == EXIT_USAGE
    err = capsys.readouterr().err
    assert 'goal' in err
    assert 'Traceback' not in err


def test_unknown_variant(tmp_path, capsys):
    code = main(['run', '--scenario', _scenario_path('type1_2d'), '--algo', 'rrt-connect',
                 '--out', str(tmp_path)])
    assert code == EXIT_USAGE
    err = capsys.readouterr().err
    assert 'rrtsharp-v3' in err and 'rrtstar' in err


def test_unknown_flag_exits_with_usage_code():
    with pytest.raises(SystemExit) as err:
        main(['run', '--scenario', _scenario_path('type1_2d'), '--bogus'])
    assert err.value.code == EXIT_USAGE


def test_internal_value_error_is_not_a_usage_error(tmp_path, monkeypatch):
    def broken_plan(*args, **kwargs):
        raise ValueError("history iterations must increase (5)")

    monkeypatch.setattr(cli, 'plan', broken_plan)
    with pytest.raises(ValueError, match='history iterations'):
        main(['run', '--scenario', _scenario_path('type1_2d'), '--iters', '10', '--out', str(tmp_path)])


def test_negative_iterations(tmp_path):
    code = main(['run', '--scenario', _scenario_path('type1_2d'), '--iters', '-1', '--out', str(tmp_path)])
    assert code == EXIT_USAGE


def test_sampling_budget_exhausted(tmp_path, monkeypatch):
    doc = {
        'dimension': 2,
        'bounds': {'min': [0, 0], 'max': [10, 10]},
        'obstacles': [{'min': [0, 0], 'max': [10, 9.9999999]}],
        'x_init': [5, 9.99999995],
        'goal': {'min': [0, 9.99999991], 'max': [1, 10]},
    }
    path = tmp_path / 'blocked.json'
    path.write_text(json.dumps(doc), encoding='utf-8')
    monkeypatch.setitem(planner_config.DEFAULTS, 'sample_budget', 5)
    code = main(['run', '--scenario', str(path), '--iters', '10', '--out', str(tmp_path)])
    assert code == EXIT_SAMPLING


@pytest.mark.parametrize('algo', ['rrtsharp', 'rrtsharp-v2', 'rrtstar'])
def test_check_passes(tmp_path, algo):
    code = main(['check', '--scenario', _scenario_path('type2_2d'), '--algo', algo,
                 '--iters', '300', '--stride', '50', '--out', str(tmp_path)])
    assert code == EXIT_OK
    assert not list(tmp_path.glob('violation_*.txt'))


def test_check_zero_iterations(tmp_path):
    code = main(['check', '--scenario', _scenario_path('type1_2d'), '--iters', '0', '--out', str(tmp_path)])
    assert code == EXIT_OK


def test_check_detects_injected_fault(tmp_path):
    code = main(['check', '--scenario', _scenario_path('type4_2d'), '--iters', '200', '--stride', '50',
                 '--inject-fault', '--out', str(tmp_path)])
    assert code == EXIT_INVARIANT
    snapshot = tmp_path / 'violation_50.txt'
    assert snapshot.exists()
    assert parse_graph_dump(_read(snapshot)).vertices[0]['g'] == 1.0


def test_compare_writes_tables(tmp_path):
    code = main(['compare', '--scenario', _scenario_path('type1_2d'), '--algo', 'rrtsharp,rrtstar',
                 '--iters', '60', '--stride', '20', '--trials', '2', '--out', str(tmp_path)])
    assert code == EXIT_OK
    stats = _read(tmp_path / 'stats.csv').splitlines()
    assert stats[0] == 'variant,iteration,mean_cost,variance,unsolved_fraction,mean_elapsed_s'
    assert len(stats) == 1 + 2 * 4
    ratios = _read(tmp_path / 'time_ratio.csv').splitlines()
    assert ratios[0] == 'variant,iteration,time_ratio'
    assert len(ratios) == 1 + 2 * 3
    assert (tmp_path / 'stats_normalized.csv').exists()
    counts = _read(tmp_path / 'vertex_counts.csv').splitlines()
    assert len(counts) == 1 + 2 * 2


def test_compare_runs_each_trial_once(tmp_path, monkeypatch):
    calls = []
    real_plan = bench.plan

    def counting_plan(*args, **kwargs):
        calls.append(args[1])
        return real_plan(*args, **kwargs)

    monkeypatch.setattr(bench, 'plan', counting_plan)
    monkeypatch.setitem(planner_config.DEFAULTS, 'workers', 1)
    code = main(['compare', '--scenario', _scenario_path('type1_2d'), '--algo', 'rrtsharp,rrtsharp-v2',
                 '--iters', '40', '--stride', '20', '--trials', '3', '--out', str(tmp_path)])
    assert code == EXIT_OK
    # dos variantes más el RRT* de referencia, tres ensayos cada una
    assert len(calls) == 9
    ratios = _read(tmp_path / 'time_ratio.csv').splitlines()
    assert len(ratios) == 1 + 2 * 2


def test_compare_unknown_variant(tmp_path, capsys):
    code = main(['compare', '--scenario', _scenario_path('type1_2d'), '--algo', 'rrtsharp,nope',
                 '--out', str(tmp_path)])
    assert code == EXIT_USAGE
    assert 'rrtsharp-v1' in capsys.readouterr().err


@pytest.mark.slow
@pytest.mark.parametrize('name', BUNDLED)
def test_check_bundled_scenarios(tmp_path, name):
    code = main(['check', '--scenario', _scenario_path(name), '--algo', 'rrtsharp',
                 '--iters', '5000', '--stride', '100', '--out', str(tmp_path)])
    assert code == EXIT_OK
