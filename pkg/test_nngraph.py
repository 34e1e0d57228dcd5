"""
Pruebas del grafo: vecino más cercano y consultas por radio contra fuerza bruta
"""

import math

import numpy as np
import pytest

from nngraph import (
    Graph,
    dump_graph,
    insert_vertex,
    near,
    nearest,
    parse_graph_dump,
    steer,
)


def _filled(count, seed=0, dimension=2):
    rng = np.random.default_rng(seed)
    graph = Graph(dimension, gamma=10.0, eta=1.5)
    points = rng.uniform(0, 10, (count, dimension))
    for p in points:
        insert_vertex(graph, p)
    return graph, points


def test_insert_assigns_dense_ids():
    graph = Graph(2, gamma=10.0, eta=1.0)
    assert insert_vertex(graph, [0, 0]) == 0
    assert insert_vertex(graph, [1, 1]) == 1
    assert len(graph) == 2
    record = graph[1]
    assert math.isinf(record.g) and math.isinf(record.lmc)
    assert record.parent is None and record.neighbors == {}


def test_nearest_on_empty_graph():
    with pytest.raises(ValueError):
        nearest(Graph(2, gamma=1.0, eta=1.0), [0, 0])


def test_nearest_tie_goes_to_lowest_id():
    graph = Graph(2, gamma=1.0, eta=1.0)
    insert_vertex(graph, [0, 0])
    insert_vertex(graph, [2, 0])
    assert nearest(graph, [1, 0]) == 0


@pytest.mark.parametrize('dimension', [2, 5])
def test_nearest_matches_brute_force(dimension):
    # suficientes puntos para que convivan árbol y tramo reciente
    graph, points = _filled(700, seed=dimension, dimension=dimension)
    rng = np.random.default_rng(100 + dimension)
    for q in rng.uniform(0, 10, (200, dimension)):
        expected = int(np.argmin(((points - q) ** 2).sum(axis=1)))
        assert nearest(graph, q) == expected


@pytest.mark.parametrize('dimension', [2, 5])
def test_near_matches_brute_force(dimension):
    graph, points = _filled(700, seed=7 + dimension, dimension=dimension)
    r = graph.radius(len(graph))
    rng = np.random.default_rng(dimension)
    for q in rng.uniform(0, 10, (200, dimension)):
        d2 = ((points - q) ** 2).sum(axis=1)
        expected = [i for i in range(len(points)) if 0 < d2[i] <= r * r]
        assert near(graph, q, len(graph)) == expected


def test_near_excludes_coincident_vertex():
    graph = Graph(2, gamma=10.0, eta=1.0)
    insert_vertex(graph, [1, 1])
    insert_vertex(graph, [1.5, 1])
    assert near(graph, [1, 1], 2) == [1]


def test_near_with_single_vertex_is_empty():
    graph = Graph(2, gamma=10.0, eta=1.0)
    insert_vertex(graph, [1, 1])
    assert near(graph, [1.2, 1], 1) == []


def test_steer():
    assert list(steer([0, 0], [0.5, 0], 1.0)) == [0.5, 0.0]
    far = steer([0, 0], [3, 4], 1.0)
    assert far == pytest.approx([0.6, 0.8])
    rng = np.random.default_rng(1)
    for _ in range(1000):
        a, b = rng.uniform(-5, 5, (2, 3))
        eta = rng.uniform(0.1, 2.0)
        assert np.linalg.norm(steer(a, b, eta) - a) <= eta * (1 + 1e-12)


def test_connect_is_symmetric():
    graph = Graph(2, gamma=10.0, eta=1.0)
    for p in ([0, 0], [1, 0], [1, 1]):
        insert_vertex(graph, p)
    graph.connect(0, 1, 1.0)
    graph.connect(2, 1, 1.0)
    graph.connect(1, 0, 1.0)
    assert graph.edge_count == 2
    assert graph[1].neighbors == {0: 1.0, 2: 1.0}
    assert sorted(graph.edges()) == [(0, 1), (1, 2)]


def test_dump_and_parse():
    graph = Graph(2, gamma=10.0, eta=1.0)
    for p in ([0, 0], [0.1, 0.2], [1.0 / 3.0, 2.0]):
        insert_vertex(graph, p)
    graph[0].g = graph[0].lmc = 0.0
    graph[1].lmc = 0.25
    graph[1].parent = 0
    graph.connect(0, 1, 0.25)
    labels = ['CONSISTENT_FINITE', 'INCONSISTENT_INF_G_FINITE_LMC', 'CONSISTENT_INFINITE']
    text = dump_graph(graph, labels)
    dump = parse_graph_dump(text)

    assert [v['id'] for v in dump.vertices] == [0, 1, 2]
    assert dump.vertices[2]['coords'] == (1.0 / 3.0, 2.0)
    assert dump.vertices[1]['parent'] == 0
    assert dump.vertices[0]['parent'] == -1
    assert math.isinf(dump.vertices[1]['g'])
    assert dump.vertices[1]['lmc'] == 0.25
    assert [v['category'] for v in dump.vertices] == labels
    assert dump.edges == [(0, 1)]


def test_parse_rejects_bad_line():
    text = '# vertices: id, coords..., g, lmc, parent_id, category\n0, 1.0, oops\n'
    with pytest.raises(ValueError, match='line 2'):
        parse_graph_dump(text)
