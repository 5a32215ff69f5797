"""Synthetic benchmark graphs: grids, paths, trees, Sierpinski triangles,
triangulated meshes and random connected graphs."""

from __future__ import annotations

import random

from .graph import Graph


def grid(rows: int, cols: int) -> Graph:
    edges = []
    for i in range(rows):
        for j in range(cols):
            v = i * cols + j
            if j + 1 < cols:
                edges.append((v, v + 1))
            if i + 1 < rows:
                edges.append((v, v + cols))
    return Graph.from_edges(edges, range(rows * cols))


def path(n: int) -> Graph:
    return Graph.from_edges(((i, i + 1) for i in range(n - 1)), range(n))


def cycle(n: int) -> Graph:
    return Graph.from_edges(((i, (i + 1) % n) for i in range(n)), range(n))


def complete(n: int) -> Graph:
    return Graph.from_edges(((i, j) for i in range(n) for j in range(i + 1, n)), range(n))


def tree(branching: int, depth: int) -> Graph:
    """Complete ``branching``-ary tree with ``depth`` levels below the root."""
    edges = []
    frontier, nxt = [0], 1
    for _ in range(depth):
        new = []
        for p in frontier:
            for _ in range(branching):
                edges.append((p, nxt))
                new.append(nxt)
                nxt += 1
        frontier = new
    return Graph.from_edges(edges, range(nxt))


def sierpinski(depth: int) -> Graph:
    """Sierpinski triangle graph: 3(3^d + 1)/2 vertices, 3^(d+1) edges."""
    side = 2 ** depth
    edges: list[tuple[tuple[int, int], tuple[int, int]]] = []

    def split(a, b, c, level):
        if level == 0:
            edges.extend(((a, b), (b, c), (c, a)))
            return
        ab = ((a[0] + b[0]) // 2, (a[1] + b[1]) // 2)
        bc = ((b[0] + c[0]) // 2, (b[1] + c[1]) // 2)
        ca = ((c[0] + a[0]) // 2, (c[1] + a[1]) // 2)
        split(a, ab, ca, level - 1)
        split(ab, b, bc, level - 1)
        split(ca, bc, c, level - 1)

    split((0, 0), (side, 0), (0, side), depth)
    ids = {p: i for i, p in enumerate(sorted({p for e in edges for p in e}))}
    return Graph.from_edges((ids[a], ids[b]) for a, b in edges)


def triangulated_mesh(rows: int, cols: int) -> Graph:
    """Grid with one diagonal per cell, the kind of mesh finite-element graphs come from."""
    edges = []
    for i in range(rows):
        for j in range(cols):
            v = i * cols + j
            if j + 1 < cols:
                edges.append((v, v + 1))
            if i + 1 < rows:
                edges.append((v, v + cols))
                if j + 1 < cols:
                    edges.append((v, v + cols + 1))
    return Graph.from_edges(edges, range(rows * cols))


def random_connected(n: int, m: int, seed: int = 0) -> Graph:
    """Random spanning tree plus ``m - n + 1`` extra distinct edges."""
    if n < 1 or not n - 1 <= m <= n * (n - 1) // 2:
        raise ValueError("need n >= 1 and n - 1 <= m <= n(n-1)/2")
    rng = random.Random(seed)
    order = list(range(n))
    rng.shuffle(order)
    edges = {tuple(sorted((order[i], order[rng.randrange(i)]))) for i in range(1, n)}
    while len(edges) < m:
        u, v = rng.randrange(n), rng.randrange(n)
        if u != v:
            edges.add((min(u, v), max(u, v)))
    return Graph.from_edges(sorted(edges), range(n))
