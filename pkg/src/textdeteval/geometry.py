"""Planar polygon primitives and exact region-area computations.

Every score in this package reduces to areas of boolean combinations of
simple polygons.  The exact path delegates the clipping itself to shapely's
GEOS backend (robust against the coincident-edge cases that abutting word
boxes produce constantly); :mod:`textdeteval.raster` provides an independent
sampling estimator used to cross-check these results.

All arithmetic is 64-bit floating point.  Vertices are never snapped.
"""

from __future__ import annotations

import math
from typing import Iterable, NamedTuple, Sequence

from shapely.geometry import Polygon as _ShapelyPolygon
from shapely.ops import unary_union

# |area| below this fraction of the bounding-box area marks a sliver that
# real submission files occasionally contain; callers demote or drop these.
DEGENERACY_RATIO = 1e-9


class InvalidPolygonError(ValueError):
    """Raised for input that does not describe a simple polygon."""


class Point(NamedTuple):
    """A vertex, in pixel coordinates."""

    x: float
    y: float


class Polygon:
    """Simple polygon normalized to counterclockwise vertex order.

    Either input winding is accepted; the vertex list is reversed on
    construction when needed.  Self-intersecting outlines are rejected
    rather than repaired, because silent repair changes scores in ways the
    submitter cannot predict.  Near-zero-area outlines are accepted but
    flagged via :attr:`degenerate` so the evaluation layer can demote or
    drop them with a warning.
    """

    __slots__ = ("vertices", "degenerate", "_area", "_bounds", "_shapely")

    def __init__(self, vertices: Iterable[Sequence[float]]):
        raw = [Point(float(x), float(y)) for x, y in vertices]
        for p in raw:
            if not (math.isfinite(p.x) and math.isfinite(p.y)):
                raise InvalidPolygonError(f"non-finite vertex {p!r} in {raw!r}")
        # Exactly repeated consecutive corners (common in sloppy quad files)
        # carry no geometry; drop them rather than reject the instance.
        pts = [p for i, p in enumerate(raw) if p != raw[i - 1]]
        if len(pts) < 3:
            raise InvalidPolygonError(
                f"polygon needs at least 3 distinct vertices, got {raw!r}"
            )
        if not _is_simple(pts):
            raise InvalidPolygonError(
                f"self-intersecting polygon: {[tuple(p) for p in pts]!r}"
            )
        signed = _signed_area(pts)
        if signed < 0.0:
            pts.reverse()
        self.vertices: tuple[Point, ...] = tuple(pts)
        self._area = abs(signed)
        xs = [p.x for p in pts]
        ys = [p.y for p in pts]
        self._bounds = (min(xs), min(ys), max(xs), max(ys))
        bbox_area = (self._bounds[2] - self._bounds[0]) * (
            self._bounds[3] - self._bounds[1]
        )
        self.degenerate = self._area <= DEGENERACY_RATIO * bbox_area or bbox_area == 0.0
        self._shapely: _ShapelyPolygon | None = None

    @property
    def area(self) -> float:
        """Shoelace area, in squared pixels."""
        return self._area

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        """(xmin, ymin, xmax, ymax) bounding box."""
        return self._bounds

    @property
    def shapely(self) -> _ShapelyPolygon:
        if self._shapely is None:
            self._shapely = _ShapelyPolygon(self.vertices)
        return self._shapely

    def translated(self, dx: float, dy: float) -> "Polygon":
        return Polygon((p.x + dx, p.y + dy) for p in self.vertices)

    def scaled(self, factor: float, origin: Sequence[float] = (0.0, 0.0)) -> "Polygon":
        ox, oy = origin
        return Polygon(
            (ox + (p.x - ox) * factor, oy + (p.y - oy) * factor)
            for p in self.vertices
        )

    def rotated(self, angle: float, origin: Sequence[float] = (0.0, 0.0)) -> "Polygon":
        """Rotate by ``angle`` radians counterclockwise about ``origin``."""
        ox, oy = origin
        c, s = math.cos(angle), math.sin(angle)
        return Polygon(
            (ox + (p.x - ox) * c - (p.y - oy) * s, oy + (p.x - ox) * s + (p.y - oy) * c)
            for p in self.vertices
        )

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Polygon) and self.vertices == other.vertices

    def __hash__(self) -> int:
        return hash(self.vertices)

    def __repr__(self) -> str:
        return f"Polygon({[ (p.x, p.y) for p in self.vertices ]!r})"

    def __reduce__(self):
        # The cached shapely geometry is not picklable state worth carrying.
        return (Polygon, (tuple((p.x, p.y) for p in self.vertices),))


def rectangle(xmin: float, ymin: float, xmax: float, ymax: float) -> Polygon:
    """Axis-aligned rectangle polygon."""
    return Polygon([(xmin, ymin), (xmax, ymin), (xmax, ymax), (xmin, ymax)])


def _signed_area(pts: Sequence[Point]) -> float:
    acc = 0.0
    n = len(pts)
    for i in range(n):
        x1, y1 = pts[i]
        x2, y2 = pts[(i + 1) % n]
        acc += x1 * y2 - x2 * y1
    return acc / 2.0


def _cross(o: Point, a: Point, b: Point) -> float:
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)


def _on_segment(a: Point, b: Point, p: Point) -> bool:
    return (
        min(a.x, b.x) <= p.x <= max(a.x, b.x)
        and min(a.y, b.y) <= p.y <= max(a.y, b.y)
    )


def _segments_intersect(p1: Point, p2: Point, p3: Point, p4: Point) -> bool:
    d1 = _cross(p3, p4, p1)
    d2 = _cross(p3, p4, p2)
    d3 = _cross(p1, p2, p3)
    d4 = _cross(p1, p2, p4)
    if ((d1 > 0 and d2 < 0) or (d1 < 0 and d2 > 0)) and (
        (d3 > 0 and d4 < 0) or (d3 < 0 and d4 > 0)
    ):
        return True
    if d1 == 0 and _on_segment(p3, p4, p1):
        return True
    if d2 == 0 and _on_segment(p3, p4, p2):
        return True
    if d3 == 0 and _on_segment(p1, p2, p3):
        return True
    if d4 == 0 and _on_segment(p1, p2, p4):
        return True
    return False


def _is_simple(pts: Sequence[Point]) -> bool:
    """No two non-adjacent edges intersect (touching counts as intersecting)."""
    n = len(pts)
    for i in range(n):
        a1, a2 = pts[i], pts[(i + 1) % n]
        for j in range(i + 1, n):
            # Skip the edge itself and the two index-adjacent edges.
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue
            b1, b2 = pts[j], pts[(j + 1) % n]
            if _segments_intersect(a1, a2, b1, b2):
                return False
    return True


def bounds_overlap(a: Polygon, b: Polygon) -> bool:
    """True when the bounding boxes overlap with positive area."""
    ax0, ay0, ax1, ay1 = a.bounds
    bx0, by0, bx1, by1 = b.bounds
    return ax0 < bx1 and bx0 < ax1 and ay0 < by1 and by0 < ay1


def polygon_area(p: Polygon) -> float:
    """Exact area of ``p``."""
    return p.area


def intersection_area(a: Polygon, b: Polygon) -> float:
    """Exact area of ``a`` intersected with ``b``; 0 when disjoint."""
    if a.degenerate or b.degenerate or not bounds_overlap(a, b):
        return 0.0
    return a.shapely.intersection(b.shapely).area


def union_area(a: Polygon, b: Polygon) -> float:
    """Area of the union, via inclusion-exclusion with the exact intersection."""
    return a.area + b.area - intersection_area(a, b)


def outlier_area(det: Polygon, target: Polygon, others: Sequence[Polygon]) -> float:
    """Area inside ``det``, inside at least one of ``others``, outside ``target``.

    This is the region of ``det`` occupied by ground-truth instances other
    than the one it is being scored against.  Overlap that also falls
    inside ``target`` is not counted, so annotations nested inside the
    target cannot be penalized.  ``others`` entries that do not intersect
    ``det`` are skipped outright.
    """
    hits = [
        o.shapely
        for o in others
        if not o.degenerate and bounds_overlap(o, det)
    ]
    if not hits or det.degenerate:
        return 0.0
    region = unary_union(hits).intersection(det.shapely)
    if not target.degenerate:
        region = region.difference(target.shapely)
    return region.area
