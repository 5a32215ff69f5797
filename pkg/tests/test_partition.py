from __future__ import annotations

import math

import pytest
from hypothesis import given, settings, strategies as st

from multigila import generators as gen
from multigila.graph import Graph
from multigila.partition import PartitionMap, _initial, capacity, partition


def test_single_partition():
    g = gen.grid(5, 5)
    pm = partition(g, 1)
    assert set(pm.assignment.values()) == {0}


def test_two_triangles_split_at_bridge():
    g = Graph.from_edges([(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3), (2, 3)])
    for seed in range(10):
        pm = partition(g, 2, seed=seed)
        assert pm.cut_edges(g) == 1
        assert len({pm[0], pm[1], pm[2]}) == 1
        assert len({pm[3], pm[4], pm[5]}) == 1


def test_grid_cut_below_random_baseline():
    g = gen.grid(20, 20)
    for seed in range(10):
        pm = partition(g, 4, seed=seed)
        start = PartitionMap(_initial(g, 4, seed), 4)
        assert pm.cut_edges(g) / g.num_edges < 0.75
        assert pm.cut_edges(g) <= start.cut_edges(g)


def test_balance_after_every_round():
    g = gen.random_connected(300, 700, seed=2)
    cap = capacity(len(g), 5, 0.05)
    for rounds in range(0, 12):
        pm = partition(g, 5, rounds=rounds, seed=4)
        assert max(pm.sizes()) <= cap


def test_more_parts_than_vertices():
    g = gen.path(3)
    pm = partition(g, 8)
    assert len(pm.assignment) == 3
    assert max(pm.sizes()) <= capacity(3, 8, 0.05)


def test_deterministic_per_seed():
    g = gen.sierpinski(4)
    assert partition(g, 3, seed=9) == partition(g, 3, seed=9)


def test_invalid_arguments():
    with pytest.raises(ValueError):
        partition(gen.path(3), 0)
    with pytest.raises(ValueError):
        partition(gen.path(3), 2, epsilon=0)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 80), st.integers(1, 6), st.integers(0, 1000))
def test_total_and_balanced(n, parts, seed):
    g = gen.random_connected(n, min(n + n // 3, n * (n - 1) // 2), seed=seed)
    pm = partition(g, parts, seed=seed, rounds=5)
    assert sorted(pm.assignment) == g.vertex_ids
    assert all(0 <= p < parts for p in pm.assignment.values())
    assert max(pm.sizes()) <= math.floor(1.05 * math.ceil(n / parts)) or parts == 1
