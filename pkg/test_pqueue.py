"""
Pruebas de la cola indexada contra una referencia de lista ordenada
"""

import math
import random

import pytest

from pqueue import INFINITE_KEY, IndexedQueue, Key, QueueContractError, key_leq, key_lt


def test_key_order():
    assert key_lt(Key(1, 5), Key(2, 0))
    assert key_lt(Key(1, 1), Key(1, 2))
    assert not key_lt(Key(1, 1), Key(1, 1))
    assert key_leq(Key(1, 1), Key(1, 1))
    assert key_lt(Key(3, 3), INFINITE_KEY)
    assert not key_lt(INFINITE_KEY, INFINITE_KEY)


def test_empty_findmin():
    assert IndexedQueue().findmin() == (None, INFINITE_KEY)


def test_contract_errors():
    q = IndexedQueue()
    q.insert(1, Key(1, 1))
    with pytest.raises(QueueContractError):
        q.insert(1, Key(2, 2))
    with pytest.raises(QueueContractError):
        q.update(2, Key(0, 0))
    with pytest.raises(QueueContractError):
        q.remove(2)


def test_equal_keys_pop_lowest_vertex():
    q = IndexedQueue()
    for v in (5, 3, 9):
        q.insert(v, Key(1.0, 1.0))
    assert q.findmin()[0] == 3


def test_update_moves_both_ways():
    q = IndexedQueue()
    for v in range(6):
        q.insert(v, Key(float(v), float(v)))
    q.update(4, Key(-1.0, 0.0))
    assert q.findmin() == (4, Key(-1.0, 0.0))
    q.update(4, Key(10.0, 0.0))
    assert q.findmin()[0] == 0
    q.remove(0)
    assert q.findmin()[0] == 1
    assert 0 not in q and 4 in q
    assert len(q) == 5


def _run_sequence(rnd, length):
    q = IndexedQueue()
    reference = {}
    for _ in range(length):
        op = rnd.random()
        vertex = rnd.randrange(30)
        key = Key(float(rnd.randrange(8)), rnd.choice([0.0, 1.0, math.inf]))
        if op < 0.45:
            if vertex in reference:
                with pytest.raises(QueueContractError):
                    q.insert(vertex, key)
            else:
                q.insert(vertex, key)
                reference[vertex] = key
        elif op < 0.7:
            if vertex in reference:
                q.update(vertex, key)
                reference[vertex] = key
        elif op < 0.85:
            if vertex in reference:
                q.remove(vertex)
                del reference[vertex]
        elif reference:
            v, k = q.findmin()
            q.remove(v)
            expected_k, expected_v = sorted((k2, v2) for v2, k2 in reference.items())[0]
            assert (v, k) == (expected_v, expected_k)
            del reference[v]
        assert len(q) == len(reference)
        if reference:
            expected_k, expected_v = min((k2, v2) for v2, k2 in reference.items())
            assert q.findmin() == (expected_v, expected_k)
        else:
            assert q.findmin() == (None, INFINITE_KEY)


def test_random_sequences_match_sorted_reference():
    rnd = random.Random(1234)
    for _ in range(500):
        _run_sequence(rnd, 60)


@pytest.mark.slow
def test_many_random_sequences_match_sorted_reference():
    rnd = random.Random(99)
    for _ in range(100000):
        _run_sequence(rnd, 20)
