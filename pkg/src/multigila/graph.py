"""Graph representation, edge-list input, components, degree-1 pruning and reinsertion."""

from __future__ import annotations

import io
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator

Layout = dict[int, tuple[float, float]]


class GraphError(Exception):
    pass


class ParseError(GraphError):
    def __init__(self, line: int, text: str):
        super().__init__(f"line {line}: cannot parse {text!r}")
        self.line = line


class EmptyGraph(ParseError):
    """Input parsed but holds no usable edge; ``line`` is the number of lines read."""

    def __init__(self, message: str, line: int = 0):
        GraphError.__init__(self, message)
        self.line = line


class CoreEmpty(GraphError):
    pass


class Graph:
    """Undirected simple graph with positive edge weights.

    ``adj[v]`` maps each neighbour of ``v`` to the edge weight; neighbour
    dicts are ordered by id.  Instances are treated as immutable.
    """

    __slots__ = ("adj", "vertex_ids", "_m")

    def __init__(self, adj: dict[int, dict[int, float]]):
        for v, nbrs in adj.items():
            if v in nbrs:
                raise GraphError(f"self-loop at {v}")
            for u, w in nbrs.items():
                if adj.get(u, {}).get(v) != w:
                    raise GraphError(f"asymmetric edge {v}-{u}")
                if not w > 0:
                    raise GraphError(f"non-positive weight on {v}-{u}")
        self.vertex_ids: list[int] = sorted(adj)
        self.adj = {v: dict(sorted(adj[v].items())) for v in self.vertex_ids}
        self._m = sum(len(n) for n in self.adj.values()) // 2

    @classmethod
    def from_edges(cls, edges: Iterable[tuple], vertices: Iterable[int] = ()) -> "Graph":
        """Build from ``(u, v)`` or ``(u, v, w)`` tuples; loops and repeats are dropped."""
        adj: dict[int, dict[int, float]] = {v: {} for v in vertices}
        for e in edges:
            u, v = e[0], e[1]
            w = float(e[2]) if len(e) > 2 else 1.0
            if u == v:
                adj.setdefault(u, {})
                continue
            adj.setdefault(u, {})
            adj.setdefault(v, {})
            if v in adj[u]:
                continue
            adj[u][v] = w
            adj[v][u] = w
        return cls(adj)

    def __len__(self) -> int:
        return len(self.vertex_ids)

    def __contains__(self, v: int) -> bool:
        return v in self.adj

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Graph) and self.adj == other.adj

    def __repr__(self) -> str:
        return f"Graph(n={len(self)}, m={self.num_edges})"

    @property
    def num_edges(self) -> int:
        return self._m

    def neighbors(self, v: int) -> dict[int, float]:
        return self.adj[v]

    def degree(self, v: int) -> int:
        return len(self.adj[v])

    def edges(self) -> Iterator[tuple[int, int, float]]:
        for u in self.vertex_ids:
            for v, w in self.adj[u].items():
                if u < v:
                    yield u, v, w

    def subgraph(self, vertices: Iterable[int]) -> "Graph":
        keep = set(vertices)
        return Graph({v: {u: w for u, w in self.adj[v].items() if u in keep} for v in keep})


def load_edge_list(source: IO | str | bytes) -> Graph:
    """Parse a SNAP-style edge list ("u v" per line, ``#`` comments)."""
    if isinstance(source, bytes):
        source = io.StringIO(source.decode())
    elif isinstance(source, str):
        source = io.StringIO(source)
    edges = []
    lineno = 0
    for lineno, raw in enumerate(source, start=1):
        if isinstance(raw, bytes):
            raw = raw.decode()
        line = raw.strip()
        if not line or line.startswith("#") or line.startswith("%"):
            continue
        parts = line.split()
        if len(parts) < 2:
            raise ParseError(lineno, line)
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise ParseError(lineno, line) from None
        if u != v:
            edges.append((u, v))
    if not edges:
        raise EmptyGraph("no edges survive normalisation", lineno)
    return Graph.from_edges(edges)


def dump_edge_list(g: Graph) -> str:
    return "".join(f"{u} {v}\n" for u, v, _ in g.edges())


def connected_components(g: Graph) -> list[Graph]:
    """Maximal connected subgraphs, largest first, ties by smallest vertex id."""
    seen: set[int] = set()
    comps: list[list[int]] = []
    for s in g.vertex_ids:
        if s in seen:
            continue
        seen.add(s)
        stack, comp = [s], []
        while stack:
            v = stack.pop()
            comp.append(v)
            for u in g.adj[v]:
                if u not in seen:
                    seen.add(u)
                    stack.append(u)
        comps.append(comp)
    comps.sort(key=lambda c: (-len(c), min(c)))
    return [g.subgraph(c) for c in comps]


@dataclass
class PruneRecord:
    removed: list[tuple[int, int]] = field(default_factory=list)

    def leaf_counts(self) -> dict[int, int]:
        """Number of pruned leaves per anchor."""
        counts: dict[int, int] = defaultdict(int)
        for _, anchor in self.removed:
            counts[anchor] += 1
        return dict(counts)

    def by_anchor(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = defaultdict(list)
        for leaf, anchor in self.removed:
            out[anchor].append(leaf)
        return {a: sorted(ls) for a, ls in sorted(out.items())}


def prune_degree_one(g: Graph, iterations: int = 1) -> tuple[Graph, PruneRecord]:
    """Remove every degree-1 vertex in simultaneous passes (one by default).

    Raises :class:`CoreEmpty` when a pass would delete the whole graph, and
    ``ValueError`` for graphs under three vertices, which bypass pruning.
    """
    if len(g) < 3:
        raise ValueError("pruning needs at least 3 vertices")
    rec = PruneRecord()
    core = g
    for _ in range(iterations):
        leaves = [v for v in core.vertex_ids if core.degree(v) == 1]
        if not leaves:
            break
        if len(leaves) >= len(core):
            raise CoreEmpty("pruning would delete every vertex")
        leaf_set = set(leaves)
        for v in leaves:
            (anchor,) = core.adj[v]
            if anchor in leaf_set:
                raise CoreEmpty(f"leaves {v} and {anchor} form an isolated edge")
            rec.removed.append((v, anchor))
        core = core.subgraph(v for v in core.vertex_ids if v not in leaf_set)
    return core, rec


def reinsertion_radius(layout: Layout, anchor: int, g_original: Graph,
                       default_distance: float = 1.0) -> float:
    """Quarter of the distance from ``anchor`` to its nearest positioned neighbour."""
    ax, ay = layout[anchor]
    best = math.inf
    for u in g_original.adj[anchor]:
        if u in layout:
            ux, uy = layout[u]
            best = min(best, math.hypot(ux - ax, uy - ay))
    if not math.isfinite(best) or best == 0.0:
        best = default_distance
    return 0.25 * best


def fan_angles(edge_angles: list[float], k: int) -> list[float]:
    """Angles for ``k`` new edges spread over the widest gap between ``edge_angles``."""
    if not edge_angles:
        return [2 * math.pi * j / k for j in range(k)]
    angs = sorted(a % (2 * math.pi) for a in edge_angles)
    best_gap, start = -1.0, 0.0
    for i, a in enumerate(angs):
        nxt = angs[i + 1] if i + 1 < len(angs) else angs[0] + 2 * math.pi
        if nxt - a > best_gap:
            best_gap, start = nxt - a, a
    step = best_gap / (k + 1)
    return [start + step * j for j in range(1, k + 1)]


def reinsert(layout: Layout, rec: PruneRecord, g_original: Graph) -> Layout:
    """Place pruned leaves on a small fan around their anchors."""
    out = dict(layout)
    for anchor, leaves in rec.by_anchor().items():
        ax, ay = layout[anchor]
        r = reinsertion_radius(layout, anchor, g_original)
        drawn = [
            math.atan2(layout[u][1] - ay, layout[u][0] - ax)
            for u in g_original.adj[anchor]
            if u in layout
        ]
        for leaf, theta in zip(leaves, fan_angles(drawn, len(leaves))):
            out[leaf] = (ax + r * math.cos(theta), ay + r * math.sin(theta))
    return out
