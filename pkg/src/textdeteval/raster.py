"""Grid-sampling area estimator, independent of the exact GEOS-backed path.

A region is a boolean expression over polygons, built with ``&``, ``|`` and
``-``.  The estimator lays a ``resolution x resolution`` lattice of cell
centers over the joint bounding box of every operand and counts the centers
the expression covers.  Polygon membership is decided per lattice row from
the exact edge crossings (even-odd rule), so the per-polygon cost is close
to O(edges x rows) rather than O(rows x cols).

This module deliberately shares no geometry code with
:mod:`textdeteval.geometry`: it is the second, independent route used to
validate the exact operations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .geometry import Polygon

MIN_RESOLUTION = 256


@dataclass(frozen=True)
class Region:
    """Node of a boolean set expression over polygons."""

    op: str  # "poly" | "and" | "or" | "sub"
    polygon: Polygon | None = None
    operands: tuple["Region", ...] = field(default=())

    def __and__(self, other: "Region | Polygon") -> "Region":
        return Region("and", operands=(self, region(other)))

    def __or__(self, other: "Region | Polygon") -> "Region":
        return Region("or", operands=(self, region(other)))

    def __sub__(self, other: "Region | Polygon") -> "Region":
        return Region("sub", operands=(self, region(other)))

    def polygons(self) -> Iterator[Polygon]:
        if self.op == "poly":
            assert self.polygon is not None
            yield self.polygon
        else:
            for node in self.operands:
                yield from node.polygons()

    def _mask(self, ctx: "_Grid") -> np.ndarray:
        if self.op == "poly":
            return ctx.polygon_mask(self.polygon)
        left = self.operands[0]._mask(ctx)
        right = self.operands[1]._mask(ctx)
        if self.op == "and":
            return left & right
        if self.op == "or":
            return left | right
        if self.op == "sub":
            return left & ~right
        raise ValueError(f"unknown region op {self.op!r}")


def region(obj: "Region | Polygon") -> Region:
    """Wrap a polygon as a leaf region; regions pass through unchanged."""
    if isinstance(obj, Region):
        return obj
    return Region("poly", polygon=obj)


class _Grid:
    """Sample lattice over a bounding box, with a per-polygon mask cache."""

    def __init__(self, bounds: tuple[float, float, float, float], resolution: int):
        x0, y0, x1, y1 = bounds
        self.cell_area = ((x1 - x0) / resolution) * ((y1 - y0) / resolution)
        step_x = (x1 - x0) / resolution
        step_y = (y1 - y0) / resolution
        self.xs = x0 + (np.arange(resolution) + 0.5) * step_x
        self.ys = y0 + (np.arange(resolution) + 0.5) * step_y
        self.resolution = resolution
        self._cache: dict[Polygon, np.ndarray] = {}

    def polygon_mask(self, poly: Polygon) -> np.ndarray:
        cached = self._cache.get(poly)
        if cached is not None:
            return cached
        mask = _rasterize(poly, self.xs, self.ys)
        self._cache[poly] = mask
        return mask


def _rasterize(poly: Polygon, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Even-odd membership of each (ys[r], xs[c]) cell center."""
    vx = np.array([p.x for p in poly.vertices])
    vy = np.array([p.y for p in poly.vertices])
    x1, y1 = vx, vy
    x2, y2 = np.roll(vx, -1), np.roll(vy, -1)

    # Edge e straddles row y when exactly one endpoint satisfies y_i <= y;
    # the half-open rule keeps the crossing count even on every row.
    below1 = y1[:, None] <= ys[None, :]
    below2 = y2[:, None] <= ys[None, :]
    straddle = below1 != below2

    dy = (y2 - y1)[:, None]
    t = np.divide(
        ys[None, :] - y1[:, None],
        dy,
        out=np.zeros((len(vx), len(ys))),
        where=straddle,
    )
    xc = x1[:, None] + t * (x2 - x1)[:, None]

    # Flatten to (row, crossing-x) events sorted by row then x.  Crossing
    # counts are even per row, so consecutive even/odd positions pair into
    # covered x-intervals even across row boundaries.
    rows_idx, _ = np.nonzero(straddle.T)
    xs_cross = xc.T[straddle.T]
    order = np.lexsort((xs_cross, rows_idx))
    rows_idx = rows_idx[order]
    xs_cross = xs_cross[order]

    mask = np.zeros((len(ys), len(xs)), dtype=bool)
    lo = np.searchsorted(xs, xs_cross[0::2], side="left")
    hi = np.searchsorted(xs, xs_cross[1::2], side="left")
    for r, i0, i1 in zip(rows_idx[0::2], lo, hi):
        if i1 > i0:
            mask[r, i0:i1] = True
    return mask


def rasterized_area(expr: "Region | Polygon", resolution: int = 1024) -> float:
    """Estimate the area of ``expr`` by counting covered lattice centers.

    The lattice spans the joint bounding box of every operand polygon, with
    ``resolution`` samples per axis.  Accuracy improves roughly linearly
    with ``resolution``; 1024 keeps typical errors well under 1% for
    non-sliver regions.
    """
    if resolution < MIN_RESOLUTION:
        raise ValueError(f"resolution must be >= {MIN_RESOLUTION}, got {resolution}")
    expr = region(expr)
    polys = list(expr.polygons())
    if not polys:
        return 0.0
    x0 = min(p.bounds[0] for p in polys)
    y0 = min(p.bounds[1] for p in polys)
    x1 = max(p.bounds[2] for p in polys)
    y1 = max(p.bounds[3] for p in polys)
    if x1 <= x0 or y1 <= y0:
        return 0.0
    grid = _Grid((x0, y0, x1, y1), resolution)
    mask = expr._mask(grid)
    return float(np.count_nonzero(mask)) * grid.cell_area
