"""Shared execution context for the pipeline's BSP programs."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Mapping

from . import engine
from .engine import EngineConfig, RunStats, VertexProgram
from .graph import Graph
from .partition import PartitionMap, partition

log = logging.getLogger(__name__)


@dataclass
class BspRunner:
    """Runs vertex programs with one worker/partition setup and totals their stats.

    Each level graph is partitioned once (label propagation) and the map is
    reused by every program executed on that graph.
    """

    workers: int = 1
    partitions: int | None = None
    balance_epsilon: float = 0.05
    partition_rounds: int = 30
    repartition_per_level: bool = True
    seed: int = 0
    max_supersteps: int = 100_000
    stats: RunStats = field(default_factory=RunStats)
    phase_stats: dict[str, RunStats] = field(default_factory=dict)
    _cached: tuple[Graph, PartitionMap] | None = None
    _first: PartitionMap | None = None

    def partition_for(self, g: Graph) -> PartitionMap | None:
        parts = self.partitions or self.workers
        if parts <= 1 and self.workers <= 1:
            return None
        if self._cached is not None and self._cached[0] is g:
            return self._cached[1]
        if not self.repartition_per_level and self._first is not None:
            pmap = PartitionMap(
                {v: self._first.assignment.get(v, v % parts) for v in g.vertex_ids}, parts)
        else:
            pmap = partition(g, parts, self.balance_epsilon, self.partition_rounds, self.seed)
            if self._first is None:
                self._first = pmap
        self._cached = (g, pmap)
        return pmap

    def run(self, g: Graph, program: VertexProgram, init: Mapping[int, Any],
            seed: int, phase: str = "bsp") -> dict:
        pmap = self.partition_for(g)
        cfg = EngineConfig(
            num_workers=self.workers,
            max_supersteps=self.max_supersteps,
            partition_map=pmap.assignment if pmap is not None else None,
            seed=seed,
        )
        states, stats = engine.run(g, program, init, cfg)
        self.stats.merge(stats)
        self.phase_stats.setdefault(phase, RunStats()).merge(stats)
        log.debug("%s: n=%d supersteps=%d messages=%d", phase, len(g),
                  stats.supersteps_executed, stats.total_messages)
        return states
