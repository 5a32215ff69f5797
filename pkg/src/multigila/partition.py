"""Balanced, locality-aware vertex-to-worker assignment by label propagation."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

from .engine import derive_seed
from .graph import Graph


@dataclass
class PartitionMap:
    assignment: dict[int, int]
    parts: int

    def __getitem__(self, v: int) -> int:
        return self.assignment[v]

    def __contains__(self, v: int) -> bool:
        return v in self.assignment

    def sizes(self) -> list[int]:
        sizes = [0] * self.parts
        for p in self.assignment.values():
            sizes[p] += 1
        return sizes

    def cut_edges(self, g: Graph) -> int:
        a = self.assignment
        return sum(1 for u, v, _ in g.edges() if a[u] != a[v])


def capacity(n: int, parts: int, epsilon: float) -> int:
    return max(1, math.floor((1 + epsilon) * math.ceil(n / parts)))


def _initial(g: Graph, parts: int, seed: int) -> dict[int, int]:
    # hash-ordered round robin: random but exactly balanced
    order = sorted(g.vertex_ids, key=lambda v: (derive_seed(seed, "init", v), v))
    return {v: i % parts for i, v in enumerate(order)}


def partition(g: Graph, parts: int, epsilon: float = 0.05, rounds: int = 30,
              seed: int = 0) -> PartitionMap:
    """Capacity-penalised label propagation.

    Every round each vertex scores label ``l`` as
    ``count_l / degree - load_l / capacity`` over a snapshot of its
    neighbours' labels and proposes a move to the best strictly-improving
    label (ties to the smaller label).  Proposals migrate with probability
    one half; opposite-direction proposals are paired into swaps, the rest
    are admitted in gain order while the destination stays under capacity,
    so balance holds after every round.
    """
    if parts < 1:
        raise ValueError("parts must be >= 1")
    if epsilon <= 0:
        raise ValueError("epsilon must be > 0")
    if parts == 1:
        return PartitionMap({v: 0 for v in g.vertex_ids}, 1)
    cap = capacity(len(g), parts, epsilon)
    penalty_cap = (1 + epsilon) * math.ceil(len(g) / parts)
    labels = _initial(g, parts, seed)
    for rnd in range(rounds):
        loads = Counter(labels.values())
        proposals: dict[tuple[int, int], list[tuple[float, int]]] = {}
        for v in g.vertex_ids:
            counts = Counter(labels[u] for u in g.adj[v])
            if not counts:
                continue
            cur = labels[v]
            deg = len(g.adj[v])
            cur_score = counts.get(cur, 0) / deg - loads[cur] / penalty_cap
            best, best_score = cur, cur_score
            for lab in sorted(counts):
                if lab == cur:
                    continue
                score = counts[lab] / deg - loads[lab] / penalty_cap
                if score > best_score:
                    best, best_score = lab, score
            if best == cur:
                continue
            if derive_seed(seed, "migrate", rnd, v) & 1:
                continue
            proposals.setdefault((cur, best), []).append((best_score - cur_score, v))
        if not proposals:
            continue
        for lst in proposals.values():
            lst.sort(key=lambda t: (-t[0], t[1]))
        new_loads = dict(loads)
        moved: set[int] = set()
        # opposite-direction pairs swap without changing either load
        for (a, b), lst in sorted(proposals.items()):
            if a > b:
                continue
            back = proposals.get((b, a), [])
            for (_, u), (_, w) in zip(lst, back):
                labels[u], labels[w] = b, a
                moved.update((u, w))
        for (a, b), lst in sorted(proposals.items()):
            for _, v in lst:
                if v in moved:
                    continue
                if new_loads.get(b, 0) + 1 <= cap:
                    labels[v] = b
                    new_loads[b] = new_loads.get(b, 0) + 1
                    new_loads[a] -= 1
                    moved.add(v)
    return PartitionMap(labels, parts)
