"""Solar Placer: initial positions for level i from a drawing of level i+1.

Two vertex programs.  On the coarse graph every vertex broadcasts its
coordinates so each image knows where its linked neighbours were drawn.
The driver then hands that knowledge down the inter-level edge (a coarse
vertex carries its sun's id), and on level i each sun interpolates its
members along the inter-system links, pushing coordinates to planets
directly and to moons through their route planet.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

from .engine import Context, VertexProgram, relay_two_hop
from .graph import Graph, Layout
from .merger import SUN, Level, VertexAttrs
from .messages import Coordinates, LinkPath, PositionAssign
from .runtime import BspRunner

DEFAULT_RADIUS = 1.0


class MissingCoarsePosition(Exception):
    def __init__(self, vertex: int):
        super().__init__(f"no coarse position for image {vertex}")
        self.vertex = vertex


@dataclass
class PlacementInput:
    """A drawn level i+1 together with the level i it was collapsed from."""

    coarse_graph: Graph
    coarse_layout: Layout
    level: Level

    def validate(self) -> None:
        for v in self.coarse_graph.vertex_ids:
            if v not in self.coarse_layout:
                raise MissingCoarsePosition(v)
        parent = self.level.parent or {}
        for v in self.level.graph.vertex_ids:
            img = parent.get(v)
            if img is None or img not in self.coarse_layout:
                raise MissingCoarsePosition(v if img is None else img)


# ---------------------------------------------------------------------------
# coarse level: coordinate broadcast


@dataclass
class _Image:
    x: float
    y: float
    known: dict[int, tuple[float, float]]

    def words(self) -> int:
        return 2 + 3 * len(self.known)


class BroadcastCoordinates(VertexProgram):
    def compute(self, ctx: Context) -> None:
        st: _Image = ctx.state
        if ctx.superstep == 0:
            ctx.send_to_neighbors(Coordinates(st.x, st.y))
        else:
            for sender, msg in ctx.inbox:
                st.known[sender] = (msg.x, msg.y)
        ctx.vote_to_halt()


# ---------------------------------------------------------------------------
# level i: intra-system distribution


@dataclass
class _Member:
    attrs: VertexAttrs
    x: float | None = None
    y: float | None = None
    # suns only: own image position, linked images, link table row
    known: dict[int, tuple[float, float]] | None = None
    links: dict[int, set[LinkPath]] | None = None
    radius: float = DEFAULT_RADIUS

    def words(self) -> int:
        n = 3 + self.attrs.words()
        if self.known:
            n += 3 * len(self.known)
        if self.links:
            n += sum(len(p) for ps in self.links.values() for p in ps)
        return n


def interpolate(path: LinkPath, positions: Mapping[int, tuple[float, float]]
                ) -> dict[int, tuple[float, float]]:
    """Candidate point of every inner vertex of a sun-to-sun path."""
    s, t = path[0], path[-1]
    (sx, sy), (tx, ty) = positions[s], positions[t]
    hops = len(path) - 1
    return {
        v: (sx + d / hops * (tx - sx), sy + d / hops * (ty - sy))
        for d, v in enumerate(path[1:-1], start=1)
    }


def member_positions(sun: VertexAttrs, links: Mapping[int, set[LinkPath]],
                     known: Mapping[int, tuple[float, float]]) -> dict[int, tuple[float, float]]:
    """Mean of the link interpolants for each linked member of ``sun``'s system."""
    members = {sun.id} | (sun.planet_list or set()) | set(sun.moon_routes or {})
    cands: dict[int, list[tuple[float, float]]] = {}
    for t in sorted(links):
        for path in sorted(links[t]):
            for v, c in interpolate(path, known).items():
                if v in members:
                    cands.setdefault(v, []).append(c)
    return {
        v: (math.fsum(c[0] for c in cs) / len(cs), math.fsum(c[1] for c in cs) / len(cs))
        for v, cs in cands.items()
    }


class DistributePositions(VertexProgram):
    def compute(self, ctx: Context) -> None:
        st: _Member = ctx.state
        a = st.attrs
        if ctx.superstep == 0:
            if a.state == SUN:
                self._place_system(ctx, st)
            ctx.vote_to_halt()
            return
        for _, msg in relay_two_hop(ctx):
            st.x, st.y = msg.x, msg.y
        ctx.vote_to_halt()

    @staticmethod
    def _place_system(ctx: Context, st: _Member) -> None:
        a = st.attrs
        sx, sy = st.known[a.id]
        st.x, st.y = sx, sy
        linked = member_positions(a, st.links or {}, st.known)
        rng = ctx.random("disc")

        def position(v: int) -> tuple[float, float]:
            if v in linked:
                return linked[v]
            r = st.radius * math.sqrt(rng.random())
            theta = 2 * math.pi * rng.random()
            return sx + r * math.cos(theta), sy + r * math.sin(theta)

        for p in sorted(a.planet_list):
            ctx.send(p, PositionAssign(*position(p)))
        for m in sorted(a.moon_routes):
            ctx.send_two_hop(a.moon_routes[m], m, PositionAssign(*position(m)))


def fallback_radius(v: int, x: float, y: float, known: Mapping[int, tuple[float, float]]) -> float:
    """Half the mean drawn length of the image's incident coarse edges."""
    lengths = [math.hypot(px - x, py - y) for u, (px, py) in known.items() if u != v]
    mean = math.fsum(lengths) / len(lengths) if lengths else 0.0
    return 0.5 * mean if mean > 0 else DEFAULT_RADIUS


def place_level(inp: PlacementInput, seed: int = 0, runner: BspRunner | None = None) -> Layout:
    """Initial layout of ``inp.level`` derived from the coarse drawing."""
    inp.validate()
    runner = runner or BspRunner()
    cg, level = inp.coarse_graph, inp.level
    images = {v: _Image(*inp.coarse_layout[v], {}) for v in cg.vertex_ids}
    images = runner.run(cg, BroadcastCoordinates(), images, seed, "placer.broadcast")

    # inter-level edge: each image hands its knowledge to its sun (same id);
    # the coarse vertex is not needed afterwards
    members: dict[int, _Member] = {}
    for v, a in level.attrs.items():
        st = _Member(a)
        if a.state == SUN:
            img = images[v]
            st.known = dict(img.known)
            st.known[v] = (img.x, img.y)
            st.links = level.links.get(v, {})
            st.radius = fallback_radius(v, img.x, img.y, img.known)
        members[v] = st
    states = runner.run(level.graph, DistributePositions(), members, seed, "placer.distribute")
    out: Layout = {}
    for v, st in states.items():
        if st.x is None:
            raise MissingCoarsePosition(v)
        out[v] = (st.x, st.y)
    return out
