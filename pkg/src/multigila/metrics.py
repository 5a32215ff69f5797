"""Drawing quality (crossings per edge, edge-length spread), component
arrangement and export to SVG, coordinate text and JSON reports."""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass
from typing import Any, Iterable, Sequence

import numpy as np

from .engine import RunStats, derive_seed
from .graph import Graph, Layout

PERTURBATION = 1e-9
MARGIN = 0.1
PADDING = 0.05


class DegenerateDrawing(ValueError):
    pass


class UnsupportedFormat(ValueError):
    pass


@dataclass(frozen=True)
class QualityReport:
    cre: float
    neld: float
    crossings_total: int
    edge_count: int
    mean_edge_length: float


# ---------------------------------------------------------------------------
# crossings


def _segments(g: Graph, layout: Layout) -> tuple[np.ndarray, np.ndarray]:
    """Edge endpoint ids (m, 2) and perturbed coordinates (m, 4) as x1 y1 x2 y2."""
    ids = np.array([(u, v) for u, v, _ in g.edges()], dtype=np.int64).reshape(-1, 2)
    verts = g.vertex_ids
    pts = np.array([layout[v] for v in verts], dtype=float).reshape(-1, 2)
    if len(pts):
        span = float(np.ptp(pts, axis=0).max())
        eps = PERTURBATION * (span if span > 0 else 1.0)
        # fixed per-vertex nudge so coincident or collinear input reaches general position
        theta = np.array([derive_seed(0, "perturb", v) / 2.0**64 * 2 * math.pi for v in verts])
        pts = pts + eps * np.column_stack((np.cos(theta), np.sin(theta)))
    index = {v: i for i, v in enumerate(verts)}
    rows = np.array([index[v] for v in ids.ravel()], dtype=np.int64).reshape(-1, 2)
    coords = np.hstack((pts[rows[:, 0]], pts[rows[:, 1]])) if len(rows) else np.zeros((0, 4))
    return ids, coords


def _orient(ax, ay, bx, by, cx, cy):
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


def _cross_mask(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Proper-intersection test between segment rows of ``a`` and ``b`` (broadcast)."""
    o1 = _orient(a[..., 0], a[..., 1], a[..., 2], a[..., 3], b[..., 0], b[..., 1])
    o2 = _orient(a[..., 0], a[..., 1], a[..., 2], a[..., 3], b[..., 2], b[..., 3])
    o3 = _orient(b[..., 0], b[..., 1], b[..., 2], b[..., 3], a[..., 0], a[..., 1])
    o4 = _orient(b[..., 0], b[..., 1], b[..., 2], b[..., 3], a[..., 2], a[..., 3])
    return (o1 * o2 < 0) & (o3 * o4 < 0)


def count_crossings(g: Graph, layout: Layout) -> int:
    """Pairs of edges whose segments properly cross (shared endpoints excluded).

    Sweeps edges in order of their left end; each edge is tested only against
    later edges whose x-range starts before it ends and whose y-range overlaps.
    """
    ids, seg = _segments(g, layout)
    if len(seg) < 2:
        return 0
    xlo = np.minimum(seg[:, 0], seg[:, 2])
    order = np.argsort(xlo, kind="stable")
    ids, seg, xlo = ids[order], seg[order], xlo[order]
    xhi = np.maximum(seg[:, 0], seg[:, 2])
    ylo = np.minimum(seg[:, 1], seg[:, 3])
    yhi = np.maximum(seg[:, 1], seg[:, 3])
    ends = np.searchsorted(xlo, xhi, side="right")
    total = 0
    for i in range(len(seg) - 1):
        j = ends[i]
        if j <= i + 1:
            continue
        w = slice(i + 1, j)
        keep = (ylo[w] <= yhi[i]) & (yhi[w] >= ylo[i])
        if not keep.any():
            continue
        cand = seg[w][keep]
        cid = ids[w][keep]
        disjoint = (cid != ids[i, 0]).all(axis=1) & (cid != ids[i, 1]).all(axis=1)
        total += int(np.count_nonzero(_cross_mask(seg[i], cand) & disjoint))
    return total


def count_crossings_brute(g: Graph, layout: Layout) -> int:
    """All-pairs reference count over the same perturbed segments."""
    ids, seg = _segments(g, layout)
    total = 0
    for i in range(len(seg) - 1):
        cand, cid = seg[i + 1:], ids[i + 1:]
        disjoint = (cid != ids[i, 0]).all(axis=1) & (cid != ids[i, 1]).all(axis=1)
        total += int(np.count_nonzero(_cross_mask(seg[i], cand) & disjoint))
    return total


# ---------------------------------------------------------------------------
# edge lengths


def edge_lengths(g: Graph, layout: Layout) -> list[float]:
    return [math.dist(layout[u], layout[v]) for u, v, _ in g.edges()]


def neld(g: Graph, layout: Layout) -> float:
    """Population standard deviation of edge lengths over their mean."""
    lengths = edge_lengths(g, layout)
    if not lengths:
        raise DegenerateDrawing("no edges")
    mean = math.fsum(lengths) / len(lengths)
    if mean == 0:
        raise DegenerateDrawing("all edges have zero length")
    var = math.fsum((x - mean) ** 2 for x in lengths) / len(lengths)
    return math.sqrt(var) / mean


def cre(crossings: int, m: int) -> float:
    # each crossing is charged to both of its edges
    return 2 * crossings / m if m else 0.0


def quality_report(g: Graph, layout: Layout) -> QualityReport:
    m = g.num_edges
    x = count_crossings(g, layout)
    if m == 0:
        return QualityReport(0.0, 0.0, 0, 0, 0.0)
    lengths = edge_lengths(g, layout)
    return QualityReport(cre(x, m), neld(g, layout), x, m, math.fsum(lengths) / m)


# ---------------------------------------------------------------------------
# component arrangement


def bounding_box(layout: Layout, vertices: Iterable[int] | None = None
                 ) -> tuple[float, float, float, float]:
    pts = [layout[v] for v in (layout if vertices is None else vertices)]
    if not pts:
        return 0.0, 0.0, 0.0, 0.0
    xs = [p[0] for p in pts]
    ys = [p[1] for p in pts]
    return min(xs), min(ys), max(xs), max(ys)


def arrange_components(parts: Sequence[tuple[Graph, Layout]]) -> Layout:
    """Translate component drawings into the cells of a near-square matrix.

    Components go row by row in order of decreasing size.  Every box gets
    the same margin on each side, a tenth of the largest box dimension, so
    neighbouring boxes are at least two margins apart.  The union's box is
    anchored at the origin.
    """
    if not parts:
        return {}
    order = sorted(range(len(parts)),
                   key=lambda i: (-len(parts[i][0]), min(parts[i][0].vertex_ids, default=0)))
    boxes = [bounding_box(parts[i][1], parts[i][0].vertex_ids) for i in order]
    largest = max(max(b[2] - b[0], b[3] - b[1]) for b in boxes)
    margin = MARGIN * largest if largest > 0 else MARGIN
    cols = math.ceil(math.sqrt(len(parts)))
    rows = math.ceil(len(parts) / cols)
    col_w = [0.0] * cols
    row_h = [0.0] * rows
    for k, (x0, y0, x1, y1) in enumerate(boxes):
        r, c = divmod(k, cols)
        col_w[c] = max(col_w[c], x1 - x0 + 2 * margin)
        row_h[r] = max(row_h[r], y1 - y0 + 2 * margin)
    col_x = [math.fsum(col_w[:c]) for c in range(cols)]
    row_y = [math.fsum(row_h[:r]) for r in range(rows)]
    shifts = [
        (col_x[k % cols] + margin - boxes[k][0], row_y[k // cols] + margin - boxes[k][1])
        for k in range(len(order))
    ]
    # anchor the union at the origin within the same single translation
    ux = min(b[0] + s[0] for b, s in zip(boxes, shifts))
    uy = min(b[1] + s[1] for b, s in zip(boxes, shifts))
    out: Layout = {}
    for k, i in enumerate(order):
        g, lay = parts[i]
        dx, dy = shifts[k][0] - ux, shifts[k][1] - uy
        for v in g.vertex_ids:
            x, y = lay[v]
            out[v] = (x + dx, y + dy)
    return out


# ---------------------------------------------------------------------------
# export


def _svg(layout: Layout, g: Graph) -> str:
    x0, y0, x1, y1 = bounding_box(layout, g.vertex_ids)
    size = max(x1 - x0, y1 - y0)
    if size <= 0:
        size = 1.0
    pad = PADDING * size
    r = 0.005 * size
    stroke = 0.002 * size
    buf = io.StringIO()
    buf.write('<?xml version="1.0" encoding="UTF-8"?>\n')
    buf.write(
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'viewBox="{x0 - pad!r} {y0 - pad!r} {x1 - x0 + 2 * pad!r} {y1 - y0 + 2 * pad!r}">\n'
    )
    buf.write(f'<g stroke="#444" stroke-width="{stroke!r}">\n')
    for u, v, _ in g.edges():
        (ax, ay), (bx, by) = layout[u], layout[v]
        buf.write(f'<line x1="{ax!r}" y1="{ay!r}" x2="{bx!r}" y2="{by!r}"/>\n')
    buf.write('</g>\n<g fill="#c33">\n')
    for v in g.vertex_ids:
        x, y = layout[v]
        buf.write(f'<circle id="v{v}" cx="{x!r}" cy="{y!r}" r="{r!r}"/>\n')
    buf.write("</g>\n</svg>\n")
    return buf.getvalue()


def format_coords(layout: Layout) -> str:
    return "".join(f"{v} {x!r} {y!r}\n" for v, (x, y) in sorted(layout.items()))


def read_coords(text: str | bytes) -> Layout:
    if isinstance(text, bytes):
        text = text.decode()
    out: Layout = {}
    for line in text.splitlines():
        if line.strip():
            v, x, y = line.split()
            out[int(v)] = (float(x), float(y))
    return out


def report_dict(report: QualityReport, stats: RunStats | None = None,
                levels: Sequence[int] = (), **extra: Any) -> dict:
    out = {
        "cre": report.cre,
        "neld": report.neld,
        "crossings": report.crossings_total,
        "edge_count": report.edge_count,
        "mean_edge_length": report.mean_edge_length,
        "levels": list(levels),
        "supersteps": stats.supersteps_executed if stats else 0,
        "messages": stats.total_messages if stats else 0,
    }
    out.update(extra)
    return out


def export(layout: Layout, g: Graph, fmt: str, *, report: QualityReport | None = None,
           stats: RunStats | None = None, levels: Sequence[int] = (), **extra: Any) -> bytes:
    """Serialize a drawing as ``svg``, ``coords`` or ``json-report``."""
    if fmt == "svg":
        return _svg(layout, g).encode()
    if fmt == "coords":
        return format_coords(layout).encode()
    if fmt == "json-report":
        report = report or quality_report(g, layout)
        doc = report_dict(report, stats, levels, **extra)
        return (json.dumps(doc, indent=2, sort_keys=True) + "\n").encode()
    raise UnsupportedFormat(f"unknown export format {fmt!r}")

