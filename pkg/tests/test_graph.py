from __future__ import annotations

import io
import math

import pytest
from hypothesis import given, settings, strategies as st

from multigila import generators as gen
from multigila.graph import (
    CoreEmpty, EmptyGraph, Graph, GraphError, ParseError, PruneRecord, connected_components,
    dump_edge_list, fan_angles, load_edge_list, prune_degree_one, reinsert, reinsertion_radius,
)
from oracles import crossings_exact


def test_minimal_parse():
    g = load_edge_list("1 2\n2 3")
    assert (len(g), g.num_edges) == (3, 2)


def test_loops_and_duplicates_removed():
    g = load_edge_list(b"1 1\n1 2\n2 1")
    assert (len(g), g.num_edges) == (2, 1)


def test_comments_and_file_objects():
    g = load_edge_list(io.BytesIO(b"# header\n% other\n\n5 6\n"))
    assert g.vertex_ids == [5, 6]


def test_malformed_token_reports_line():
    with pytest.raises(ParseError) as info:
        load_edge_list("1 x")
    assert info.value.line == 1
    with pytest.raises(ParseError) as info:
        load_edge_list("1 2\n3\n")
    assert info.value.line == 2


def test_empty_input():
    with pytest.raises(EmptyGraph):
        load_edge_list("")
    with pytest.raises(EmptyGraph):
        load_edge_list("# nothing\n4 4\n")


def test_roundtrip_serialization_is_idempotent():
    g = gen.random_connected(50, 90, seed=3)
    text = dump_edge_list(g)
    assert load_edge_list(text) == g
    assert dump_edge_list(load_edge_list(text)) == text


def test_graph_validation():
    with pytest.raises(GraphError):
        Graph({1: {2: 1.0}, 2: {}})
    with pytest.raises(GraphError):
        Graph({1: {1: 1.0}})
    with pytest.raises(GraphError):
        Graph({1: {2: 0.0}, 2: {1: 0.0}})


def test_adjacency_sorted():
    g = Graph.from_edges([(3, 1), (3, 2), (1, 2)])
    assert list(g.adj[3]) == [1, 2]
    assert g.vertex_ids == [1, 2, 3]


def test_connected_grid_single_component():
    g = gen.grid(4, 4)
    assert connected_components(g) == [g]


def test_two_triangles():
    g = Graph.from_edges([(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3)])
    comps = connected_components(g)
    assert [c.vertex_ids for c in comps] == [[0, 1, 2], [3, 4, 5]]


def test_component_order():
    edges = [(i, i + 1) for i in range(4)]
    edges += [(10 + a, 10 + b) for a in range(4) for b in range(a + 1, 4)]
    edges += [(20, 21)]
    comps = connected_components(Graph.from_edges(edges))
    assert [len(c) for c in comps] == [5, 4, 2]


def test_star_prunes_to_center():
    g = Graph.from_edges([(0, i) for i in range(1, 6)])
    core, rec = prune_degree_one(g)
    assert core.vertex_ids == [0]
    assert sorted(rec.removed) == [(i, 0) for i in range(1, 6)]
    assert rec.leaf_counts() == {0: 5}


def test_cycle_is_fixed_point():
    g = gen.cycle(6)
    core, rec = prune_degree_one(g)
    assert core == g and rec.removed == []


def test_single_pass_on_path():
    core, rec = prune_degree_one(gen.path(4))
    assert core.vertex_ids == [1, 2]
    assert sorted(rec.removed) == [(0, 1), (3, 2)]


def test_iterated_pruning_flag():
    core, rec = prune_degree_one(gen.path(7), iterations=2)
    assert core.vertex_ids == [2, 3, 4]
    assert len(rec.removed) == 4


def test_pruning_preconditions():
    with pytest.raises(ValueError):
        prune_degree_one(Graph.from_edges([(0, 1)]))
    # P3 keeps its centre; only a pass that deletes everything is refused
    core, _ = prune_degree_one(gen.path(3))
    assert core.vertex_ids == [1]
    # second pass on path(4) would remove the remaining edge b-c
    with pytest.raises(CoreEmpty):
        prune_degree_one(gen.path(4), iterations=2)


def test_reinsert_single_leaf_distance_and_gap():
    g = Graph.from_edges([(0, 1), (0, 2)])
    layout = {0: (0.0, 0.0), 1: (4.0, 0.0)}
    rec = PruneRecord([(2, 0)])
    out = reinsert(layout, rec, g)
    x, y = out[2]
    assert math.hypot(x, y) == pytest.approx(1.0)
    # only drawn edge points along +x, so the widest gap is centred on -x
    assert (x, y) == pytest.approx((-1.0, 0.0))


def test_fan_spacing_in_half_plane_gap():
    angles = fan_angles([0.0, math.pi], 3)
    assert angles == pytest.approx([math.pi / 4, math.pi / 2, 3 * math.pi / 4])


def test_fan_without_drawn_edges_uses_full_circle():
    assert fan_angles([], 4) == pytest.approx([0, math.pi / 2, math.pi, 3 * math.pi / 2])


def test_empty_record_keeps_layout():
    layout = {0: (1.0, 2.0), 1: (3.0, 4.0)}
    assert reinsert(layout, PruneRecord(), gen.path(2)) == layout


def test_radius_default_without_neighbours():
    assert reinsertion_radius({0: (0.0, 0.0)}, 0, Graph.from_edges([(0, 1)])) == 0.25


@settings(max_examples=30, deadline=None)
@given(st.integers(4, 60), st.integers(0, 10_000))
def test_prune_reinsert_roundtrip_and_local_fans(n, seed):
    import random

    g = gen.random_connected(n, n + 2, seed=seed)
    try:
        core, rec = prune_degree_one(g)
    except CoreEmpty:
        return
    rng = random.Random(seed)
    layout = {v: (rng.uniform(0, 10), rng.uniform(0, 10)) for v in core.vertex_ids}
    out = reinsert(layout, rec, g)
    assert sorted(out) == g.vertex_ids
    for anchor, leaves in rec.by_anchor().items():
        r = reinsertion_radius(layout, anchor, g)
        for leaf in leaves:
            assert math.dist(out[leaf], out[anchor]) == pytest.approx(r)
        fan = Graph.from_edges([(anchor, leaf) for leaf in leaves])
        assert crossings_exact(fan, out) == 0
