"""Protocol messages exchanged by the coarsening, placement and layout programs.

Routing through an intermediate neighbour uses :class:`multigila.engine.TwoHop`.
"""

from __future__ import annotations

from dataclasses import dataclass

LinkPath = tuple[int, ...]


@dataclass(frozen=True, slots=True)
class SunBeacon:
    origin: int
    committed: bool


@dataclass(frozen=True, slots=True)
class Offer:
    sun: int
    hop: int
    takeover: bool = False


@dataclass(frozen=True, slots=True)
class Confirm:
    member: int
    mass: float


@dataclass(frozen=True, slots=True)
class MoonConfirm:
    moon: int
    mass: float
    planet: int


@dataclass(frozen=True, slots=True)
class Conflict:
    """Witnessed path between two suns, oriented from the lower-id offer's sun."""

    path: LinkPath

    def words(self) -> int:
        return len(self.path)


@dataclass(frozen=True, slots=True)
class Leave:
    member: int
    mass: float


@dataclass(frozen=True, slots=True)
class Retract:
    path: LinkPath

    def words(self) -> int:
        return len(self.path)


@dataclass(frozen=True, slots=True)
class Discovery:
    """Inter-link discovery: the sender's system sun and its route to it."""

    sun: int
    route: LinkPath

    def words(self) -> int:
        return 1 + len(self.route)


@dataclass(frozen=True, slots=True)
class LinkReport:
    path: LinkPath

    def words(self) -> int:
        return len(self.path)


@dataclass(frozen=True, slots=True)
class Coordinates:
    x: float
    y: float


@dataclass(frozen=True, slots=True)
class PositionAssign:
    x: float
    y: float


class PositionFlood(dict):
    """Batch of ``origin -> (x, y, mass)`` entries forwarded one hop further."""

    __slots__ = ()

    def words(self) -> int:
        return 1 + 4 * len(self)
