"""End-to-end layout: prune, coarsen, draw level by level, reinsert, arrange, export."""

from __future__ import annotations

import json
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from .engine import RunStats, derive_seed
from .gila import LayoutConfig, random_square, run_single_level
from .graph import CoreEmpty, EmptyGraph, Graph, Layout, PruneRecord, connected_components, \
    load_edge_list, prune_degree_one, reinsert
from .merger import Hierarchy, build_hierarchy
from .metrics import QualityReport, arrange_components, count_crossings, export, format_coords, \
    quality_report
from .placer import PlacementInput, place_level
from .runtime import BspRunner

log = logging.getLogger(__name__)


class PipelineError(Exception):
    """A failure in one phase; ``phase`` names it and ``__cause__`` holds the original."""

    def __init__(self, phase: str, cause: BaseException):
        super().__init__(f"{phase}: {type(cause).__name__}: {cause}")
        self.phase = phase
        self.cause = cause


@dataclass
class PipelineConfig:
    input: str | None = None
    svg: str | None = None
    coords: str | None = None
    report: str | None = None
    workers: int = 1
    seed: int = 0
    partitions: int | None = None
    sun_probability: float = 0.2
    coarsen_threshold: int = 30
    prune_iterations: int = 1
    balance_epsilon: float = 0.05
    partition_rounds: int = 30
    repartition_per_level: bool = True
    dump_levels: str | None = None
    verbosity: int = 0
    layout: LayoutConfig = field(default_factory=LayoutConfig)


@dataclass
class ComponentResult:
    graph: Graph
    layout: Layout
    hierarchy: Hierarchy | None
    pruned: PruneRecord | None


@dataclass
class PipelineResult:
    graph: Graph
    layout: Layout
    report: QualityReport
    components: list[ComponentResult]
    stats: RunStats
    phase_stats: dict[str, RunStats]
    seconds: float

    @property
    def levels(self) -> list[int]:
        """Level sizes of the largest component's hierarchy."""
        h = self.components[0].hierarchy if self.components else None
        return h.sizes() if h is not None else []

    def report_bytes(self) -> bytes:
        return export(
            self.layout, self.graph, "json-report", report=self.report, stats=self.stats,
            levels=self.levels, components=len(self.components),
            component_levels=[c.hierarchy.sizes() if c.hierarchy else [1]
                              for c in self.components],
            seconds=round(self.seconds, 3),
        )


class _Phase:
    def __init__(self, name: str):
        self.name = name

    def __enter__(self) -> None:
        log.debug("phase %s", self.name)

    def __exit__(self, kind, exc, tb) -> bool:
        if exc is not None and not isinstance(exc, PipelineError):
            raise PipelineError(self.name, exc) from exc
        return False


def _dump(cfg: PipelineConfig, comp: int, level: int, tag: str, layout: Layout) -> None:
    if cfg.dump_levels:
        out = Path(cfg.dump_levels)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"component{comp}_level{level}_{tag}.coords").write_text(format_coords(layout))


def _dump_hierarchy(cfg: PipelineConfig, comp: int, h: Hierarchy) -> None:
    if not cfg.dump_levels:
        return
    out = Path(cfg.dump_levels)
    out.mkdir(parents=True, exist_ok=True)
    for i, lv in enumerate(h.levels):
        doc = {
            "level": i,
            "vertices": {str(v): {"mass": a.mass, "state": a.state, "sun": a.sun}
                         for v, a in lv.attrs.items()},
            "edges": [[u, v, w] for u, v, w in lv.graph.edges()],
            "parent": {str(v): p for v, p in (lv.parent or {}).items()},
        }
        (out / f"component{comp}_level{i}_graph.json").write_text(json.dumps(doc))


def link_scale(g: Graph, layout: Layout, ideal_length: float) -> float:
    """Factor that stretches a coarse drawing to the hop length of its links.

    A coarse edge of weight ``w`` stands for a path of ``w - 1`` hops one
    level down; drawing that path straight takes ``(w - 1) * ideal_length``.
    """
    drawn = want = 0.0
    for u, v, w in g.edges():
        (ax, ay), (bx, by) = layout[u], layout[v]
        drawn += math.hypot(bx - ax, by - ay)
        want += max(1.0, w - 1) * ideal_length
    return want / drawn if drawn > 0 else 1.0


def _scaled(layout: Layout, factor: float) -> Layout:
    return {v: (x * factor, y * factor) for v, (x, y) in layout.items()}


def draw_coarsest(g: Graph, masses: dict[int, float], lc: LayoutConfig, seed: int,
                  runner: BspRunner) -> Layout:
    """Force-directed drawing from random starts; fewest crossings wins, then earliest."""
    params = lc.params(g.num_edges, coarsest=True)
    best: tuple[int, Layout] | None = None
    for attempt in range(max(1, lc.coarsest_restarts)):
        start = random_square(g, lc.ideal_length, derive_seed(seed, "square", attempt))
        drawn = run_single_level(g, start, params, masses, lc.reflood_period,
                                 derive_seed(seed, "restart", attempt), runner)
        x = count_crossings(g, drawn)
        if best is None or x < best[0]:
            best = (x, drawn)
        if x == 0:
            break
    return best[1]


def layout_component(g: Graph, cfg: PipelineConfig, runner: BspRunner,
                     index: int = 0) -> ComponentResult:
    """Multilevel drawing of one connected component."""
    seed = derive_seed(cfg.seed, "component", min(g.vertex_ids))
    core, rec = g, None
    if len(g) >= 3 and cfg.prune_iterations > 0:
        with _Phase("prune"):
            try:
                core, rec = prune_degree_one(g, cfg.prune_iterations)
            except CoreEmpty:
                core, rec = g, None
    leaf_counts = rec.leaf_counts() if rec else None
    with _Phase("coarsen"):
        h = build_hierarchy(core, leaf_counts, cfg.sun_probability, cfg.coarsen_threshold,
                            derive_seed(seed, "hierarchy"), runner)
        _dump_hierarchy(cfg, index, h)
    lc = cfg.layout
    top = len(h.levels) - 1
    with _Phase("layout"):
        layout = draw_coarsest(h.levels[top].graph,
                               {v: a.mass for v, a in h.levels[top].attrs.items()},
                               lc, derive_seed(seed, "gila", top), runner)
        _dump(cfg, index, top, "refined", layout)
    for i in range(top - 1, -1, -1):
        lv = h.levels[i]
        with _Phase("place"):
            if lc.placement_stretch > 0:
                factor = lc.placement_stretch * link_scale(
                    h.levels[i + 1].graph, layout, lc.ideal_length)
                layout = _scaled(layout, factor)
            layout = place_level(PlacementInput(h.levels[i + 1].graph, layout, lv),
                                 derive_seed(seed, "place", i), runner)
            if len(layout) != len(lv.graph):
                raise RuntimeError(f"placement covered {len(layout)} of {len(lv.graph)}")
            _dump(cfg, index, i, "placed", layout)
        with _Phase("layout"):
            layout = run_single_level(
                lv.graph, layout, lc.params(lv.graph.num_edges, coarsest=False),
                {v: a.mass for v, a in lv.attrs.items()}, lc.reflood_period,
                derive_seed(seed, "gila", i), runner)
            _dump(cfg, index, i, "refined", layout)
    if rec is not None:
        with _Phase("reinsert"):
            layout = reinsert(layout, rec, g)
    return ComponentResult(g, layout, h, rec)


def layout_graph(g: Graph, cfg: PipelineConfig | None = None,
                 progress: Callable[[str], None] | None = None) -> PipelineResult:
    """Draw every component of ``g`` and arrange them in a matrix."""
    cfg = cfg or PipelineConfig()
    start = time.perf_counter()
    if len(g) == 0:
        raise PipelineError("load", EmptyGraph("graph has no vertices"))
    runner = BspRunner(
        workers=cfg.workers, partitions=cfg.partitions, balance_epsilon=cfg.balance_epsilon,
        partition_rounds=cfg.partition_rounds,
        repartition_per_level=cfg.repartition_per_level, seed=cfg.seed,
    )
    with _Phase("components"):
        comps = connected_components(g)
    results = []
    for i, comp in enumerate(comps):
        if progress:
            progress(f"component {i}: {len(comp)} vertices")
        results.append(layout_component(comp, cfg, runner, i))
    with _Phase("arrange"):
        layout = arrange_components([(r.graph, r.layout) for r in results])
    with _Phase("metrics"):
        report = quality_report(g, layout)
    return PipelineResult(g, layout, report, results, runner.stats, runner.phase_stats,
                          time.perf_counter() - start)


def run_pipeline(cfg: PipelineConfig) -> PipelineResult:
    """Read ``cfg.input``, draw it and write every requested artifact."""
    with _Phase("load"):
        if cfg.input is None:
            raise ValueError("no input path")
        with open(cfg.input, "rb") as fh:
            g = load_edge_list(fh)
    result = layout_graph(g, cfg)
    with _Phase("export"):
        if cfg.svg:
            Path(cfg.svg).write_bytes(export(result.layout, g, "svg"))
        if cfg.coords:
            Path(cfg.coords).write_bytes(export(result.layout, g, "coords"))
        if cfg.report:
            Path(cfg.report).write_bytes(result.report_bytes())
    return result
