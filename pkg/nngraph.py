"""
Grafo r-disc del planificador
Almacén de vértices/aristas, vecino más cercano y consultas por radio.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
from scipy.spatial import cKDTree

from space import connection_radius

logger = logging.getLogger(__name__)

INF = math.inf

# Mínimo de puntos fuera del árbol antes de reconstruirlo
_REBUILD_MIN = 64


@dataclass(eq=False)
class VertexRecord:
    position: np.ndarray
    g: float = INF
    lmc: float = INF
    parent: Optional[int] = None
    neighbors: Dict[int, float] = field(default_factory=dict)  # vecino -> coste de arista
    in_queue: bool = False


class Graph:
    """
    Vértices con índice denso (0 = x_init), adyacencia simétrica con el coste
    de cada arista y un índice espacial.

    El índice es un cKDTree sobre los primeros puntos más un tramo reciente
    que se recorre por fuerza bruta; el árbol se reconstruye cuando el tramo
    supera una octava parte del total.
    """

    def __init__(self, dimension, gamma, eta):
        self.dimension = int(dimension)
        self.gamma = float(gamma)
        self.eta = float(eta)
        self.vertices: List[VertexRecord] = []
        self.edge_count = 0
        self._points = np.empty((256, self.dimension))
        self._tree = None
        self._tree_size = 0

    def __len__(self):
        return len(self.vertices)

    def __getitem__(self, vertex_id):
        return self.vertices[vertex_id]

    @property
    def points(self):
        """Vista (n, d) de las posiciones, en orden de VertexId"""
        return self._points[:len(self.vertices)]

    def positions(self, ids):
        return self._points[np.asarray(ids, dtype=int)]

    def radius(self, n):
        return connection_radius(n, self.gamma, self.eta, self.dimension)

    def connect(self, u, v, cost):
        """Arista no dirigida (u, v) con su coste"""
        if v not in self.vertices[u].neighbors:
            self.edge_count += 1
        self.vertices[u].neighbors[v] = cost
        self.vertices[v].neighbors[u] = cost

    def edges(self):
        for u, record in enumerate(self.vertices):
            for v in record.neighbors:
                if u < v:
                    yield u, v

    def _append_point(self, p):
        n = len(self.vertices)
        if n == len(self._points):
            grown = np.empty((2 * len(self._points), self.dimension))
            grown[:n] = self._points[:n]
            self._points = grown
        self._points[n] = p

    def _refresh_index(self):
        n = len(self.vertices)
        if n - self._tree_size > max(_REBUILD_MIN, self._tree_size // 8):
            self._tree = cKDTree(self._points[:n].copy())
            self._tree_size = n
            logger.debug(f"Spatial index rebuilt with {n} points")

    def _candidates(self, x, radius):
        """Ids a distancia <= radius (holgura incluida) en árbol + tramo reciente"""
        n = len(self.vertices)
        ids = []
        if self._tree is not None and self._tree_size:
            ids = self._tree.query_ball_point(x, radius * (1.0 + 1e-9) + 1e-12)
        tail = np.arange(self._tree_size, n)
        return np.concatenate([np.asarray(ids, dtype=int), tail])


def squared_distances(points, x):
    diff = np.asarray(points, dtype=float) - np.asarray(x, dtype=float)
    return (diff * diff).sum(axis=1)


def insert_vertex(graph, p):
    """Añade un vértice con g = lmc = ∞ y sin padre; devuelve su VertexId"""
    p = np.array(p, dtype=float)
    graph._append_point(p)
    vertex_id = len(graph.vertices)
    graph.vertices.append(VertexRecord(position=p))
    graph._refresh_index()
    return vertex_id


def nearest(graph, x):
    """Vértice más cercano a x (empates: menor id)"""
    n = len(graph.vertices)
    if n == 0:
        raise ValueError("nearest() on an empty graph")
    x = np.asarray(x, dtype=float)
    bound = INF
    if graph._tree is not None and graph._tree_size:
        bound, _ = graph._tree.query(x)
    if graph._tree_size < n:
        tail = squared_distances(graph._points[graph._tree_size:n], x)
        bound = min(bound, math.sqrt(float(tail.min())))
    candidates = np.sort(graph._candidates(x, bound))
    d2 = squared_distances(graph._points[candidates], x)
    return int(candidates[int(np.argmin(d2))])


def near(graph, x, n):
    """Vértices dentro de r(n) de x, sin el coincidente con x; orden ascendente de id"""
    r = graph.radius(n)
    if r <= 0 or not graph.vertices:
        return []
    x = np.asarray(x, dtype=float)
    candidates = graph._candidates(x, r)
    if len(candidates) == 0:
        return []
    d2 = squared_distances(graph._points[candidates], x)
    keep = (d2 <= r * r) & (d2 > 0)
    return sorted(int(i) for i in candidates[keep])


def steer(origin, toward, eta):
    """Punto más cercano a `toward` dentro de la bola de radio eta centrada en `origin`"""
    origin = np.asarray(origin, dtype=float)
    toward = np.asarray(toward, dtype=float)
    delta = toward - origin
    dist = float(np.linalg.norm(delta))
    if dist <= eta:
        return toward.copy()
    return origin + eta * delta / dist


# ---------------------------------------------------------------------------
# Volcado de texto del grafo
# ---------------------------------------------------------------------------

VERTEX_HEADER = '# vertices: id, coords..., g, lmc, parent_id, category'
EDGE_HEADER = '# edges: u, v'


def _fmt(value):
    return repr(float(value))


def dump_graph(graph, labels):
    """
    Una línea por vértice `id, coords..., g, lmc, parent_id, category`
    (parent_id = -1 sin padre) y después la sección de aristas `u, v`.
    `labels` da la categoría de cada vértice.
    """
    lines = [VERTEX_HEADER]
    for vid, record in enumerate(graph.vertices):
        parent = -1 if record.parent is None else record.parent
        coords = ', '.join(_fmt(c) for c in record.position)
        lines.append(f"{vid}, {coords}, {_fmt(record.g)}, {_fmt(record.lmc)}, {parent}, {labels[vid]}")
    lines.append(EDGE_HEADER)
    for u, v in graph.edges():
        lines.append(f"{u}, {v}")
    return '\n'.join(lines) + '\n'


@dataclass
class GraphDump:
    vertices: List[dict]
    edges: List[tuple]


def parse_graph_dump(text):
    """Inverso de dump_graph; ValueError si una línea no cumple la gramática"""
    vertices, edges = [], []
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line == VERTEX_HEADER:
            section = 'vertices'
            continue
        if line == EDGE_HEADER:
            section = 'edges'
            continue
        parts = [p.strip() for p in line.split(',')]
        try:
            if section == 'vertices':
                if len(parts) < 7:
                    raise ValueError("too few fields")
                vertices.append({
                    'id': int(parts[0]),
                    'coords': tuple(float(c) for c in parts[1:-4]),
                    'g': float(parts[-4]),
                    'lmc': float(parts[-3]),
                    'parent': int(parts[-2]),
                    'category': parts[-1],
                })
            elif section == 'edges':
                if len(parts) != 2:
                    raise ValueError("edge lines have exactly two ids")
                edges.append((int(parts[0]), int(parts[1])))
            else:
                raise ValueError("content before section header")
        except ValueError as e:
            raise ValueError(f"line {lineno}: {e}") from e
    return GraphDump(vertices, edges)
