"""Distributed Solar Merger: builds the coarse graph hierarchy.

Every level is coarsened by four vertex programs: sun election, solar
system growth (repeated until every vertex belongs to a system),
inter-system link discovery and next-level generation.  Suns end up at
pairwise graph distance at least three, planets are their neighbours and
moons sit at distance two, so every solar system has diameter at most four.
"""

from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Mapping

from .engine import Context, VertexProgram, derive_seed, relay_two_hop
from .graph import Graph
from .messages import (
    Confirm, Conflict, Discovery, Leave, LinkPath, LinkReport, MoonConfirm, Offer,
    Retract, SunBeacon,
)
from .runtime import BspRunner

log = logging.getLogger(__name__)

SUN, PLANET, MOON, UNASSIGNED = "sun", "planet", "moon", "unassigned"

# per sun: neighbour sun -> set of sun-to-sun paths starting at this sun
InterLinkTable = dict[int, dict[int, set[LinkPath]]]


class MergerError(Exception):
    pass


class NoProgress(MergerError):
    pass


@dataclass
class VertexAttrs:
    id: int
    level: int
    mass: float
    state: str = UNASSIGNED
    system_sun: int | None = None
    planet_list: set[int] | None = None
    system_planets: set[int] | None = None
    # suns: moon -> planet used to reach it, total system mass, growth conflicts
    moon_routes: dict[int, int] | None = None
    system_mass: float = 0.0
    conflicts: dict[int, set[LinkPath]] | None = None
    # moons: conflict paths this moon reported while joining
    reported: list[LinkPath] | None = None
    # election bookkeeping
    fresh: bool = False
    blocked_by: tuple[int, int] | None = None

    def clone(self) -> "VertexAttrs":
        return VertexAttrs(
            self.id, self.level, self.mass, self.state, self.system_sun,
            set(self.planet_list) if self.planet_list is not None else None,
            set(self.system_planets) if self.system_planets is not None else None,
            dict(self.moon_routes) if self.moon_routes is not None else None,
            self.system_mass,
            {t: set(p) for t, p in self.conflicts.items()} if self.conflicts is not None else None,
            list(self.reported) if self.reported is not None else None,
            self.fresh, self.blocked_by,
        )

    def words(self) -> int:
        n = 8
        if self.planet_list:
            n += len(self.planet_list)
        if self.system_planets:
            n += len(self.system_planets)
        if self.moon_routes:
            n += 2 * len(self.moon_routes)
        if self.conflicts:
            n += sum(len(p) for ps in self.conflicts.values() for p in ps)
        if self.reported:
            n += 5 * len(self.reported)
        return n

    @property
    def sun(self) -> int | None:
        """Sun of this vertex's system (itself for suns)."""
        return self.id if self.state == SUN else self.system_sun

    def route(self) -> LinkPath:
        """Path from this vertex to its sun through same-system vertices."""
        if self.state == SUN:
            return (self.id,)
        if self.state == PLANET:
            return (self.id, self.system_sun)
        if self.state == MOON:
            return (self.id, min(self.system_planets), self.system_sun)
        raise MergerError(f"vertex {self.id} is unassigned")

    def make_sun(self) -> None:
        self.state = SUN
        self.fresh = True
        self.system_sun = None
        self.system_planets = None
        self.planet_list = set()
        self.moon_routes = {}
        self.system_mass = self.mass
        self.conflicts = {}

    def demote(self) -> None:
        self.state = UNASSIGNED
        self.fresh = False
        self.planet_list = None
        self.moon_routes = None
        self.system_mass = 0.0
        self.conflicts = None


@dataclass
class Level:
    graph: Graph
    attrs: dict[int, VertexAttrs]
    links: InterLinkTable = field(default_factory=dict)
    parent: dict[int, int] | None = None


@dataclass
class Hierarchy:
    levels: list[Level]

    def __len__(self) -> int:
        return len(self.levels)

    def sizes(self) -> list[int]:
        return [len(lv.graph) for lv in self.levels]


def initial_attrs(g: Graph, leaf_counts: Mapping[int, int] | None = None,
                  level: int = 0) -> dict[int, VertexAttrs]:
    leaf_counts = leaf_counts or {}
    return {v: VertexAttrs(v, level, 1.0 + leaf_counts.get(v, 0)) for v in g.vertex_ids}


# ---------------------------------------------------------------------------
# Sun Generation


class ElectSuns(VertexProgram):
    """Self-election followed by distance-1 and distance-2 conflict checks.

    Superstep 0 elects (or applies ``forced``), 1 broadcasts beacons, 2
    resolves adjacent conflicts and relays beacons, 3 resolves distance-2
    conflicts.  Suns committed in earlier rounds also beacon and always win;
    between fresh suns the lower id is demoted.
    """

    def __init__(self, p: float, forced: frozenset[int] = frozenset()):
        self.p = p
        self.forced = forced

    def compute(self, ctx: Context) -> None:
        a: VertexAttrs = ctx.state
        step = ctx.superstep
        if step == 0:
            a.blocked_by = None
            if a.state == UNASSIGNED:
                if ctx.vertex_id in self.forced or (
                    self.p > 0 and ctx.random("elect").random() < self.p
                ):
                    a.make_sun()
            if a.state != SUN:
                ctx.vote_to_halt()
            return
        if step == 1:
            ctx.send_to_neighbors(SunBeacon(ctx.vertex_id, not a.fresh))
            ctx.vote_to_halt()
            return
        for _, beacon in ctx.inbox:
            if beacon.origin == ctx.vertex_id:
                continue
            if a.state == SUN and a.fresh and (beacon.committed or beacon.origin > ctx.vertex_id):
                a.demote()
        if step == 2:
            for _, beacon in ctx.inbox:
                ctx.send_to_neighbors(beacon)
        elif a.state == UNASSIGNED:
            for relay, beacon in ctx.inbox:
                if beacon.committed and beacon.origin != ctx.vertex_id:
                    cand = (beacon.origin, relay)
                    if a.blocked_by is None or cand < a.blocked_by:
                        a.blocked_by = cand
        ctx.vote_to_halt()


def _clone_all(attrs: Mapping[int, VertexAttrs]) -> dict[int, VertexAttrs]:
    return {v: a.clone() for v, a in attrs.items()}


def elect_suns(g: Graph, attrs: Mapping[int, VertexAttrs], p: float, seed: int,
               runner: BspRunner | None = None, forced: frozenset[int] = frozenset(),
               copy: bool = True) -> dict[int, VertexAttrs]:
    """Run one election; ``forced`` vertices stand as candidates regardless of ``p``."""
    runner = runner or BspRunner()
    init = _clone_all(attrs) if copy else attrs
    return runner.run(g, ElectSuns(p, forced), init, seed, "merger.elect")


# ---------------------------------------------------------------------------
# Solar System Generation


class GrowRound(VertexProgram):
    """One offer round: fresh suns recruit planets (hop 1) and moons (hop 2).

    ``takeover`` maps a committed sun to an adjacent moon of another system
    that it absorbs as a planet; the liveness fallback uses it for vertices
    that can no longer be reached otherwise.
    """

    def __init__(self, takeover: Mapping[int, int] | None = None):
        self.takeover = dict(takeover or {})

    def compute(self, ctx: Context) -> None:
        a: VertexAttrs = ctx.state
        v = ctx.vertex_id
        if ctx.superstep == 0:
            if a.state == SUN:
                if a.fresh:
                    ctx.send_to_neighbors(Offer(v, 1))
                    a.fresh = False
                target = self.takeover.get(v)
                if target is not None:
                    ctx.send(target, Offer(v, 1, takeover=True))
            ctx.vote_to_halt()
            return

        direct: list[Offer] = []
        forwarded: dict[int, list[int]] = defaultdict(list)
        for sender, msg in relay_two_hop(ctx):
            kind = type(msg)
            if kind is Offer:
                if msg.hop == 1:
                    direct.append(msg)
                else:
                    forwarded[msg.sun].append(sender)
            elif kind is Confirm:
                a.planet_list.add(msg.member)
                a.system_mass += msg.mass
            elif kind is MoonConfirm:
                a.moon_routes[msg.moon] = msg.planet
                a.system_mass += msg.mass
            elif kind is Conflict:
                other = msg.path[-1]
                a.conflicts.setdefault(other, set()).add(msg.path)
            elif kind is Leave:
                a.moon_routes.pop(msg.member, None)
                a.system_mass -= msg.mass
            elif kind is Retract:
                paths = a.conflicts.get(msg.path[-1])
                if paths is not None:
                    paths.discard(msg.path)
                    if not paths:
                        del a.conflicts[msg.path[-1]]

        if direct:
            offer = max(direct, key=lambda o: o.sun)
            if a.state == UNASSIGNED or (a.state == MOON and offer.takeover):
                if a.state == MOON:
                    self._leave(ctx, a)
                a.state = PLANET
                a.system_sun = offer.sun
                a.system_planets = None
                ctx.send(offer.sun, Confirm(v, a.mass))
                ctx.send_to_neighbors(Offer(offer.sun, 2))
        elif forwarded and a.state == UNASSIGNED:
            best = max(forwarded)
            planets = sorted(set(forwarded[best]))
            via = planets[0]
            a.state = MOON
            a.system_sun = best
            a.system_planets = set(planets)
            a.reported = []
            ctx.send_two_hop(via, best, MoonConfirm(v, a.mass, via))
            for sun in sorted(forwarded):
                if sun == best:
                    continue
                for x in sorted(set(forwarded[sun])):
                    path = (sun, x, v, via, best)
                    a.reported.append(path)
                    ctx.send_two_hop(x, sun, Conflict(path))
                    ctx.send_two_hop(via, best, Conflict(path[::-1]))
        ctx.vote_to_halt()

    @staticmethod
    def _leave(ctx: Context, a: VertexAttrs) -> None:
        via = min(a.system_planets)
        ctx.send_two_hop(via, a.system_sun, Leave(a.id, a.mass))
        for path in a.reported or ():
            # path = (low sun, x, this moon, via, old sun)
            ctx.send_two_hop(path[1], path[0], Retract(path))
            ctx.send_two_hop(path[3], path[4], Retract(path[::-1]))
        a.reported = None


def _unassigned(attrs: Mapping[int, VertexAttrs]) -> list[int]:
    return [v for v, a in attrs.items() if a.state == UNASSIGNED]


def grow_round(g: Graph, attrs: Mapping[int, VertexAttrs], seed: int,
               runner: BspRunner | None = None, takeover: Mapping[int, int] | None = None,
               copy: bool = True) -> dict[int, VertexAttrs]:
    runner = runner or BspRunner()
    init = _clone_all(attrs) if copy else attrs
    return runner.run(g, GrowRound(takeover), init, seed, "merger.grow")


def extract_conflicts(attrs: Mapping[int, VertexAttrs]) -> InterLinkTable:
    return {
        v: {t: set(ps) for t, ps in a.conflicts.items()}
        for v, a in attrs.items()
        if a.state == SUN and a.conflicts
    }


def _takeovers(attrs: Mapping[int, VertexAttrs], blocked: list[int]) -> dict[int, int]:
    """Pick (sun, foreign moon) pairs for blocked vertices, one per sun and per moon."""
    plan: dict[int, int] = {}
    used: set[int] = set()
    for u in sorted(blocked):
        sun, moon = attrs[u].blocked_by
        if sun in plan or moon in used:
            continue
        if attrs[moon].state != MOON or attrs[moon].system_sun == sun:
            raise NoProgress(f"vertex {u} blocked by {sun} via non-moon {moon}")
        plan[sun] = moon
        used.add(moon)
    return plan


def grow_systems(g: Graph, attrs: Mapping[int, VertexAttrs], p: float, seed: int,
                 runner: BspRunner | None = None,
                 max_rounds: int | None = None) -> tuple[dict[int, VertexAttrs], InterLinkTable]:
    """Grow systems around the elected suns, re-electing until no vertex is unassigned.

    A round that assigns nothing triggers the liveness fallback.  Unassigned
    vertices farther than two hops from every sun all stand as candidates in
    a forced election (the distance checks keep the largest ids).  When
    every remaining vertex is within two hops of a sun, the path to that sun
    runs through a moon of another system; the sun takes that moon over as
    a planet and its offer then reaches the blocked vertex.
    """
    runner = runner or BspRunner()
    if not any(a.state == SUN for a in attrs.values()):
        raise MergerError("grow_systems needs at least one sun")
    attrs = grow_round(g, attrs, derive_seed(seed, "grow", 0), runner)
    remaining = _unassigned(attrs)
    rnd = 0
    limit = max_rounds if max_rounds is not None else 4 * len(g) + 10
    while remaining:
        rnd += 1
        if rnd > limit:
            raise NoProgress(f"{len(remaining)} vertices still unassigned after {limit} rounds")
        attrs = elect_suns(g, attrs, p, derive_seed(seed, "elect", rnd), runner, copy=False)
        attrs = grow_round(g, attrs, derive_seed(seed, "grow", rnd), runner, copy=False)
        now = _unassigned(attrs)
        if len(now) < len(remaining):
            remaining = now
            continue
        # the election above also refreshed the blocked markers
        free = frozenset(v for v in now if attrs[v].blocked_by is None)
        if free:
            attrs = elect_suns(g, attrs, 0.0, derive_seed(seed, "force", rnd), runner,
                               forced=free, copy=False)
            attrs = grow_round(g, attrs, derive_seed(seed, "grow-forced", rnd), runner,
                               copy=False)
        else:
            attrs = grow_round(g, attrs, derive_seed(seed, "takeover", rnd), runner,
                               takeover=_takeovers(attrs, now), copy=False)
        now = _unassigned(attrs)
        if len(now) >= len(remaining):
            raise NoProgress(f"fallback assigned nothing; {len(now)} unassigned")
        remaining = now
    return attrs, extract_conflicts(attrs)


# ---------------------------------------------------------------------------
# Inter-System Link Generation


class DiscoverLinks(VertexProgram):
    """Every vertex announces its sun and route; cross-system receivers report paths home."""

    def compute(self, ctx: Context) -> None:
        a: VertexAttrs = ctx.state
        if ctx.superstep == 0:
            ctx.send_to_neighbors(Discovery(a.sun, a.route()))
            ctx.vote_to_halt()
            return
        mine = relay_two_hop(ctx)
        if a.state == SUN:
            for _, msg in mine:
                if type(msg) is LinkReport:
                    a.conflicts.setdefault(msg.path[-1], set()).add(msg.path)
        home = None
        for _, msg in mine:
            if type(msg) is not Discovery or msg.sun == a.sun:
                continue
            if home is None:
                home = a.route()[::-1]
            path = home + msg.route
            if a.state == SUN:
                a.conflicts.setdefault(msg.sun, set()).add(path)
            elif a.state == PLANET:
                ctx.send(a.system_sun, LinkReport(path))
            else:
                route = a.route()
                ctx.send_two_hop(route[1], a.system_sun, LinkReport(path))
        ctx.vote_to_halt()


def discover_links(g: Graph, attrs: Mapping[int, VertexAttrs],
                   partial_conflicts: InterLinkTable | None = None, seed: int = 0,
                   runner: BspRunner | None = None) -> InterLinkTable:
    runner = runner or BspRunner()
    if any(a.state == UNASSIGNED for a in attrs.values()):
        raise MergerError("discover_links needs every vertex assigned")
    init = _clone_all(attrs)
    for a in init.values():
        if a.state == SUN:
            a.conflicts = {}
    states = runner.run(g, DiscoverLinks(), init, seed, "merger.links")
    table: InterLinkTable = {}
    for v, a in states.items():
        if a.state == SUN:
            table[v] = {t: set(ps) for t, ps in a.conflicts.items()}
    for s, per in (partial_conflicts or {}).items():
        for t, ps in per.items():
            table.setdefault(s, {}).setdefault(t, set()).update(ps)
    return table


# ---------------------------------------------------------------------------
# Next Level Generation


def link_weight(paths: set[LinkPath]) -> float:
    """Vertex count of the longest sun-to-sun path of a link bundle."""
    return float(max(len(p) for p in paths))


def build_next_level(g: Graph, attrs: Mapping[int, VertexAttrs], links: InterLinkTable
                     ) -> tuple[Graph, dict[int, VertexAttrs], dict[int, int]]:
    """Collapse each solar system into a vertex carrying the sun's id."""
    suns = sorted(v for v, a in attrs.items() if a.state == SUN)
    adj: dict[int, dict[int, float]] = {s: {} for s in suns}
    for s in suns:
        for t, paths in links.get(s, {}).items():
            if paths:
                adj[s][t] = link_weight(paths)
    for s in suns:
        for t, w in adj[s].items():
            if adj[t].get(s) != w:
                raise MergerError(f"inter-link table asymmetric between {s} and {t}")
    coarse = Graph(adj)
    level = next(iter(attrs.values())).level + 1
    cattrs = {s: VertexAttrs(s, level, attrs[s].system_mass) for s in suns}
    parent = {v: a.sun for v, a in attrs.items()}
    return coarse, cattrs, parent


def coarsen_level(g: Graph, attrs: Mapping[int, VertexAttrs], p: float, seed: int,
                  runner: BspRunner | None = None) -> tuple[Level, Graph, dict[int, VertexAttrs]]:
    runner = runner or BspRunner()
    attrs = elect_suns(g, attrs, p, derive_seed(seed, "elect", 0), runner)
    if not any(a.state == SUN for a in attrs.values()):
        attrs = elect_suns(g, attrs, 0.0, derive_seed(seed, "force", 0), runner,
                           frozenset([min(g.vertex_ids)]))
    attrs, conflicts = grow_systems(g, attrs, p, seed, runner)
    links = discover_links(g, attrs, conflicts, derive_seed(seed, "links"), runner)
    coarse, cattrs, parent = build_next_level(g, attrs, links)
    return Level(g, attrs, links, parent), coarse, cattrs


def build_hierarchy(component: Graph, leaf_counts: Mapping[int, int] | None = None,
                    p: float = 0.2, threshold: int = 30, seed: int = 0,
                    runner: BspRunner | None = None) -> Hierarchy:
    """Coarsen until a level has fewer than ``threshold`` vertices (or just one)."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("sun probability must lie in [0, 1]")
    runner = runner or BspRunner()
    g = component
    attrs = initial_attrs(g, leaf_counts)
    levels: list[Level] = []
    while len(g) >= threshold and len(g) > 1:
        lvl_seed = derive_seed(seed, "level", len(levels))
        level, coarse, cattrs = coarsen_level(g, attrs, p, lvl_seed, runner)
        levels.append(level)
        log.info("level %d: %d -> %d vertices", len(levels) - 1, len(g), len(coarse))
        g, attrs = coarse, cattrs
    levels.append(Level(g, attrs))
    return Hierarchy(levels)
