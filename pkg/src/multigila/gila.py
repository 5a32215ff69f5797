"""Single-level force-directed refinement over k-neighbourhoods.

Each vertex learns the positions of the vertices within ``k`` hops by
controlled flooding (every vertex forwards origins it sees for the first
time, one hop per superstep) and moves under Fruchterman-Reingold forces:
repulsion from its k-neighbourhood, attraction along its edges.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, fields, replace
from typing import Mapping

from .engine import Context, VertexProgram
from .graph import Graph, Layout
from .messages import PositionFlood
from .runtime import BspRunner

EPS = 1e-6

# (upper edge bound, k); first bracket whose bound exceeds m wins
_K_SCHEDULE = ((1_000, 6), (5_000, 5), (10_000, 4), (100_000, 3), (1_000_000, 2))


def choose_k(m: int) -> int:
    """Neighbourhood radius for a level graph with ``m`` edges."""
    if m < 0:
        raise ValueError("edge count must be non-negative")
    for bound, k in _K_SCHEDULE:
        if m < bound:
            return k
    return 1


@dataclass(frozen=True)
class LayoutParams:
    k: int = 3
    iterations: int = 50
    ideal_length: float = 1.0
    repulsion_constant: float = 1.0
    initial_max_displacement: float = 1.0
    cooling_exponent: float = 1.0
    mass_repulsion: bool = True

    def __post_init__(self) -> None:
        if self.k < 1 or self.iterations < 1:
            raise ValueError("k and iterations must be >= 1")
        for name in ("ideal_length", "repulsion_constant", "initial_max_displacement"):
            val = getattr(self, name)
            if not (val > 0 and math.isfinite(val)):
                raise ValueError(f"{name} must be positive and finite")
        if not 0 < self.cooling_exponent <= 1:
            raise ValueError("cooling_exponent must lie in (0, 1]")

    def max_displacement(self, t: int) -> float:
        frac = max(0.0, 1.0 - t / self.iterations)
        return self.initial_max_displacement * frac ** self.cooling_exponent


@dataclass
class LayoutConfig:
    """Tunables of the ``[layout]`` section; ``k`` of 0 means "choose from m".

    ``placement_stretch`` rescales each coarse drawing before it is carried
    down a level so that a link of ``h`` hops spans about
    ``placement_stretch * h * ideal_length``; 0 disables the rescaling.
    The coarsest level is drawn from ``coarsest_restarts`` random starts and
    the drawing with the fewest crossings is kept.
    """

    ideal_length: float = 1.0
    repulsion_constant: float = 1.0
    initial_max_displacement: float = 1.0
    cooling_exponent: float = 1.0
    coarsest_iterations: int = 300
    refine_iterations: int = 50
    reflood_period: int = 1
    mass_repulsion: bool = True
    k: int = 0
    placement_stretch: float = 2.0
    coarsest_restarts: int = 4

    def params(self, m: int, coarsest: bool) -> LayoutParams:
        return LayoutParams(
            k=self.k or choose_k(m),
            iterations=self.coarsest_iterations if coarsest else self.refine_iterations,
            ideal_length=self.ideal_length,
            repulsion_constant=self.repulsion_constant,
            initial_max_displacement=self.initial_max_displacement,
            cooling_exponent=self.cooling_exponent,
            mass_repulsion=self.mass_repulsion,
        )

    def updated(self, **overrides) -> "LayoutConfig":
        known = {f.name for f in fields(self)}
        return replace(self, **{k: v for k, v in overrides.items() if k in known and v is not None})


def desired_length(params: LayoutParams, weight: float) -> float:
    # coarse-edge weights (vertex counts >= 2) stretch the ideal length
    return params.ideal_length * max(1.0, weight / 2.0)


def _coincident_direction(seed: int, v: int, u: int, t: int) -> tuple[float, float]:
    """Unit vector pushing ``v`` away from a coincident ``u`` (antisymmetric in the pair)."""
    lo, hi = (v, u) if v < u else (u, v)
    theta = random.Random(f"{seed}/coincident/{lo}/{hi}/{t}").random() * 2 * math.pi
    sign = 1.0 if v == lo else -1.0
    return sign * math.cos(theta), sign * math.sin(theta)


def pair_force(v: int, pv: tuple[float, float], u: int, pu: tuple[float, float],
               mass_u: float, params: LayoutParams, norm: float = 1.0,
               weight: float | None = None, t: int = 0, seed: int = 0) -> tuple[float, float]:
    """Force of ``u`` on ``v``: repulsion, plus attraction when ``weight`` is given."""
    dx = pv[0] - pu[0]
    dy = pv[1] - pu[1]
    d2 = dx * dx + dy * dy
    if d2 < EPS * EPS:
        ux, uy = _coincident_direction(seed, v, u, t)
        dx, dy, d2 = ux * EPS, uy * EPS, EPS * EPS
    scale = params.repulsion_constant * params.ideal_length ** 2
    if params.mass_repulsion:
        scale *= mass_u / norm
    fx = scale * dx / d2
    fy = scale * dy / d2
    if weight is not None:
        d = math.sqrt(d2)
        pull = d / desired_length(params, weight)
        fx -= dx * pull
        fy -= dy * pull
    return fx, fy


def _displace(v: int, x: float, y: float, view: Mapping[int, tuple], nbrs: Mapping[int, float],
              params: LayoutParams, norm: float, t: int, seed: int) -> tuple[float, float]:
    """Clamped displacement of ``v`` given its neighbourhood view."""
    scale = params.repulsion_constant * params.ideal_length ** 2
    use_mass = params.mass_repulsion
    fx = fy = 0.0
    for u, entry in view.items():
        dx = x - entry[0]
        dy = y - entry[1]
        d2 = dx * dx + dy * dy
        if d2 < EPS * EPS:
            ux, uy = _coincident_direction(seed, v, u, t)
            dx, dy, d2 = ux * EPS, uy * EPS, EPS * EPS
        f = scale * entry[2] / norm / d2 if use_mass else scale / d2
        fx += f * dx
        fy += f * dy
    ell = params.ideal_length
    for u, w in nbrs.items():
        entry = view.get(u)
        if entry is None:
            continue
        dx = x - entry[0]
        dy = y - entry[1]
        pull = math.sqrt(dx * dx + dy * dy) / (ell * max(1.0, w / 2.0))
        fx -= dx * pull
        fy -= dy * pull
    limit = params.max_displacement(t)
    size = math.hypot(fx, fy)
    if size > limit:
        fx *= limit / size
        fy *= limit / size
    return fx, fy


def mean_mass(masses: Mapping[int, float] | None, g: Graph) -> float:
    if not masses:
        return 1.0
    return math.fsum(masses[v] for v in g.vertex_ids) / len(g)


def step_forces(g: Graph, layout: Layout, views: Mapping[int, Mapping[int, tuple]],
                params: LayoutParams, t: int, masses: Mapping[int, float] | None = None,
                seed: int = 0) -> Layout:
    """One synchronous force iteration over precomputed neighbourhood views.

    ``views[v][u]`` is ``((x, y), hop, mass)`` as returned by
    :func:`flood_neighborhoods`.
    """
    norm = mean_mass(masses, g)
    out: Layout = {}
    for v in g.vertex_ids:
        x, y = layout[v]
        flat = {u: (p[0], p[1], m, hop) for u, (p, hop, m) in views[v].items()}
        dx, dy = _displace(v, x, y, flat, g.adj[v], params, norm, t, seed)
        out[v] = (x + dx, y + dy)
    return out


class _Body:
    __slots__ = ("x", "y", "mass", "view", "norm")

    def __init__(self, x: float, y: float, mass: float):
        self.x = x
        self.y = y
        self.mass = mass
        self.view: dict[int, tuple] = {}
        self.norm = 1.0

    def words(self) -> int:
        return 4 + 4 * len(self.view)


class FloodProgram(VertexProgram):
    """One flood of depth ``k``: afterwards ``state.view`` is the k-neighbourhood."""

    def __init__(self, k: int):
        self.k = k

    def state_words(self, state: _Body) -> int:
        return state.words()

    def compute(self, ctx: Context) -> None:
        st: _Body = ctx.state
        v = ctx.vertex_id
        h = ctx.superstep
        if h == 0:
            ctx.send_to_neighbors(PositionFlood({v: (st.x, st.y, st.mass)}))
            return
        new = _ingest(st.view, v, ctx.inbox, h)
        if h < self.k and new:
            ctx.send_to_neighbors(new)
        ctx.vote_to_halt()


def _ingest(view: dict, v: int, inbox: list, hop: int) -> PositionFlood:
    """Record first sightings from ``inbox`` at distance ``hop``; return them."""
    new = PositionFlood()
    for _, batch in inbox:
        fresh = batch.keys() - view.keys()
        fresh.discard(v)
        for o in fresh:
            e = batch[o]
            view[o] = (e[0], e[1], e[2], hop)
            new[o] = e
    return new


class GilaProgram(VertexProgram):
    """``iterations`` rounds of (flood, move) in one run.

    A flooding iteration lasts ``k`` supersteps; between refloods
    (``reflood_period`` > 1) an iteration refreshes only the direct
    neighbours and keeps the older positions of farther vertices.
    """

    aggregators = {"mass": "sum", "count": "sum"}

    def __init__(self, params: LayoutParams, reflood_period: int = 1, seed: int = 0):
        self.params = params
        self.seed = seed
        iters = params.iterations
        self.flood = [t % reflood_period == 0 for t in range(iters)]
        self.depth = [params.k if f else 1 for f in self.flood]
        self.iter_of: list[int] = []
        self.sub_of: list[int] = []
        for t in range(iters):
            for h in range(self.depth[t]):
                self.iter_of.append(t)
                self.sub_of.append(h)
        self.iter_of.append(iters)
        self.sub_of.append(0)

    def state_words(self, state: _Body) -> int:
        return state.words()

    def compute(self, ctx: Context) -> None:
        st: _Body = ctx.state
        v = ctx.vertex_id
        s = ctx.superstep
        t = self.iter_of[s]
        h = self.sub_of[s]
        if s == 0:
            ctx.aggregate("mass", st.mass)
            ctx.aggregate("count", 1)
        elif s == 1:
            agg = ctx.aggregates
            st.norm = agg["mass"] / agg["count"]
        if s > 0:
            prev = t - 1 if h == 0 else t
            hop = self.depth[prev] if h == 0 else h
            if self.flood[prev]:
                new = _ingest(st.view, v, ctx.inbox, hop)
            else:
                new = None
                for _, batch in ctx.inbox:
                    for o, e in batch.items():
                        st.view[o] = (e[0], e[1], e[2], 1)
            if h > 0:
                if new:
                    ctx.send_to_neighbors(new)
                return
            dx, dy = _displace(v, st.x, st.y, st.view, ctx.neighbors, self.params,
                               st.norm, prev, self.seed)
            st.x += dx
            st.y += dy
        if t < self.params.iterations:
            if self.flood[t]:
                st.view = {}
            ctx.send_to_neighbors(PositionFlood({v: (st.x, st.y, st.mass)}))
        else:
            ctx.vote_to_halt()


def _bodies(g: Graph, layout: Layout, masses: Mapping[int, float] | None) -> dict[int, _Body]:
    masses = masses or {}
    return {v: _Body(*layout[v], float(masses.get(v, 1.0))) for v in g.vertex_ids}


def flood_neighborhoods(g: Graph, layout: Layout, k: int,
                        masses: Mapping[int, float] | None = None,
                        runner: BspRunner | None = None, seed: int = 0
                        ) -> dict[int, dict[int, tuple[tuple[float, float], int, float]]]:
    """Per vertex: ``u -> ((x, y), hop distance, mass)`` for every u within k hops."""
    if k < 1:
        raise ValueError("k must be >= 1")
    runner = runner or BspRunner()
    states = runner.run(g, FloodProgram(k), _bodies(g, layout, masses), seed, "gila.flood")
    return {
        v: {u: ((e[0], e[1]), e[3], e[2]) for u, e in st.view.items()}
        for v, st in states.items()
    }


def run_single_level(g: Graph, initial: Layout, params: LayoutParams,
                     masses: Mapping[int, float] | None = None, reflood_period: int = 1,
                     seed: int = 0, runner: BspRunner | None = None) -> Layout:
    """Refine ``initial`` for ``params.iterations`` force iterations."""
    if reflood_period < 1:
        raise ValueError("reflood_period must be >= 1")
    if len(g) == 1:
        return dict(initial)
    runner = runner or BspRunner()
    program = GilaProgram(params, reflood_period, seed)
    states = runner.run(g, program, _bodies(g, initial, masses), seed, "gila.layout")
    return {v: (st.x, st.y) for v, st in states.items()}


def random_square(g: Graph, ideal_length: float, seed: int) -> Layout:
    """Uniform placement in a square of side sqrt(n) * ideal_length."""
    side = math.sqrt(len(g)) * ideal_length
    rng = random.Random(f"{seed}/square")
    return {v: (rng.random() * side, rng.random() * side) for v in g.vertex_ids}
