"""
Cola de prioridad indexada sobre vértices
Montículo binario con mapa vértice -> posición; claves (k1, k2) con orden lexicográfico.
"""

import math
from typing import NamedTuple, Optional, Tuple


class Key(NamedTuple):
    k1: float
    k2: float


INFINITE_KEY = Key(math.inf, math.inf)


class QueueContractError(AssertionError):
    """Inserción duplicada, o update/remove de un vértice que no está en la cola"""


def key_leq(a, b):
    """a ≼ b"""
    return a.k1 < b.k1 or (a.k1 == b.k1 and a.k2 <= b.k2)


def key_lt(a, b):
    """a ≺ b"""
    return a.k1 < b.k1 or (a.k1 == b.k1 and a.k2 < b.k2)


class IndexedQueue:
    """
    Entradas (key, vertex) en un montículo binario; `_index` guarda la
    posición de cada vértice. Empates de clave: menor vertex primero.
    """

    __slots__ = ('_heap', '_index')

    def __init__(self):
        self._heap = []
        self._index = {}

    def __len__(self):
        return len(self._heap)

    def __contains__(self, vertex):
        return vertex in self._index

    def items(self):
        return [(v, k) for k, v in self._heap]

    def insert(self, vertex, key):
        if vertex in self._index:
            raise QueueContractError(f"vertex {vertex} already queued")
        self._heap.append((Key(*key), vertex))
        self._index[vertex] = len(self._heap) - 1
        self._siftup(len(self._heap) - 1)

    def update(self, vertex, key):
        if vertex not in self._index:
            raise QueueContractError(f"update of vertex {vertex} not in queue")
        pos = self._index[vertex]
        old = self._heap[pos]
        new = (Key(*key), vertex)
        self._heap[pos] = new
        if new < old:
            self._siftup(pos)
        else:
            self._siftdown(pos)

    def remove(self, vertex):
        if vertex not in self._index:
            raise QueueContractError(f"remove of vertex {vertex} not in queue")
        pos = self._index.pop(vertex)
        last = self._heap.pop()
        if pos == len(self._heap):
            return
        removed = self._heap[pos]
        self._heap[pos] = last
        self._index[last[1]] = pos
        if last < removed:
            self._siftup(pos)
        else:
            self._siftdown(pos)

    def findmin(self) -> Tuple[Optional[int], Key]:
        """(vertex, key) mínimo; (None, INFINITE_KEY) si la cola está vacía"""
        if not self._heap:
            return None, INFINITE_KEY
        key, vertex = self._heap[0]
        return vertex, key

    def _siftup(self, pos):
        heap, index = self._heap, self._index
        item = heap[pos]
        while pos > 0:
            parent = (pos - 1) >> 1
            if item < heap[parent]:
                heap[pos] = heap[parent]
                index[heap[pos][1]] = pos
                pos = parent
            else:
                break
        heap[pos] = item
        index[item[1]] = pos

    def _siftdown(self, pos):
        heap, index = self._heap, self._index
        size = len(heap)
        item = heap[pos]
        while True:
            child = 2 * pos + 1
            if child >= size:
                break
            right = child + 1
            if right < size and heap[right] < heap[child]:
                child = right
            if heap[child] < item:
                heap[pos] = heap[child]
                index[heap[pos][1]] = pos
                pos = child
            else:
                break
        heap[pos] = item
        index[item[1]] = pos
