"""Independent reference implementations used to check the package."""

from __future__ import annotations

from collections import deque
from fractions import Fraction

from multigila import generators as gen
from multigila.graph import Graph
from multigila.merger import MOON, PLANET, SUN, Level


def bfs(g: Graph, src: int, limit: int | None = None) -> dict[int, int]:
    dist = {src: 0}
    queue = deque([src])
    while queue:
        v = queue.popleft()
        if limit is not None and dist[v] == limit:
            continue
        for u in g.adj[v]:
            if u not in dist:
                dist[u] = dist[v] + 1
                queue.append(u)
    return dist


def k_neighbourhood(g: Graph, v: int, k: int) -> dict[int, int]:
    d = bfs(g, v, k)
    del d[v]
    return d


def quotient_edges(g: Graph, parent: dict[int, int]) -> set[tuple[int, int]]:
    """Edges of the graph obtained by contracting each parent class."""
    out = set()
    for u, v, _ in g.edges():
        a, b = parent[u], parent[v]
        if a != b:
            out.add((min(a, b), max(a, b)))
    return out


def check_level(level: Level, coarse: Graph | None) -> list[str]:
    """Protocol invariants of one coarsened level; returns the violations."""
    g, attrs = level.graph, level.attrs
    bad = []
    if any(a.state not in (SUN, PLANET, MOON) for a in attrs.values()):
        bad.append("unassigned vertex")
        return bad
    suns = sorted(v for v, a in attrs.items() if a.state == SUN)
    sunset = set(suns)
    for s in suns:
        near = bfs(g, s, 2)
        clash = [t for t in near if t != s and t in sunset]
        if clash:
            bad.append(f"suns {s} and {clash[0]} closer than 3")
    systems: dict[int, list[int]] = {}
    for v, a in attrs.items():
        systems.setdefault(a.sun, []).append(v)
    for s, members in systems.items():
        sub = g.subgraph(members)
        for v in members:
            dv = bfs(sub, v)
            if len(dv) != len(members):
                bad.append(f"system {s} disconnected")
                break
            if max(dv.values()) > 4:
                bad.append(f"system {s} diameter > 4")
                break
    if coarse is not None:
        if sum(a.mass for a in attrs.values()) != sum(
                attrs[s].system_mass for s in suns):
            bad.append("mass not conserved")
        if quotient_edges(g, level.parent) != {(u, v) for u, v, _ in coarse.edges()}:
            bad.append("coarse edges differ from quotient")
        if len(coarse) > -(-len(g) // 2):
            bad.append(f"shrink {len(g)} -> {len(coarse)}")
    return bad


def _orient(a, b, c) -> int:
    v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    return (v > 0) - (v < 0)


def crossings_exact(g: Graph, layout) -> int:
    """All pairs, exact rational orientation; assumes general position."""
    pts = {v: (Fraction(x), Fraction(y)) for v, (x, y) in layout.items()}
    edges = [(u, v) for u, v, _ in g.edges()]
    total = 0
    for i, (a, b) in enumerate(edges):
        for c, d in edges[i + 1:]:
            if len({a, b, c, d}) < 4:
                continue
            pa, pb, pc, pd = pts[a], pts[b], pts[c], pts[d]
            if (_orient(pa, pb, pc) * _orient(pa, pb, pd) < 0
                    and _orient(pc, pd, pa) * _orient(pc, pd, pb) < 0):
                total += 1
    return total


def protocol_corpus() -> dict[str, Graph]:
    """Twenty generated graphs: grids, paths, trees, Sierpinski graphs, random graphs."""
    corpus = {f"grid_{k}x{k}": gen.grid(k, k) for k in (10, 20, 30, 40)}
    corpus.update({f"path_{n}": gen.path(n) for n in (50, 300, 1000)})
    corpus.update({
        "tree_06_03": gen.tree(6, 3), "tree_06_04": gen.tree(6, 4),
        "tree_03_05": gen.tree(3, 5), "tree_02_06": gen.tree(2, 6),
    })
    corpus.update({f"sierpinski_{d:02d}": gen.sierpinski(d) for d in (3, 4, 5, 6)})
    for n, m, s in ((100, 150, 1), (300, 600, 2), (600, 900, 3), (1000, 2500, 4), (2000, 3000, 5)):
        corpus[f"random_{n}"] = gen.random_connected(n, m, seed=s)
    return corpus
