"""Shared test helpers: seeded random geometry generators."""

from __future__ import annotations

import math
import random

from textdeteval.geometry import InvalidPolygonError, Polygon


def random_simple_quad(
    rng: random.Random,
    cx: float = 250.0,
    cy: float = 250.0,
    scale: float = 180.0,
) -> Polygon:
    """Random simple quadrilateral around (cx, cy), possibly non-convex.

    Four points sorted by angle about their mean always close into a
    simple polygon; rare degenerate draws are resampled.
    """
    while True:
        pts = [
            (cx + rng.uniform(-scale, scale), cy + rng.uniform(-scale, scale))
            for _ in range(4)
        ]
        mx = sum(p[0] for p in pts) / 4.0
        my = sum(p[1] for p in pts) / 4.0
        pts.sort(key=lambda p: math.atan2(p[1] - my, p[0] - mx))
        try:
            quad = Polygon(pts)
        except InvalidPolygonError:
            continue
        if not quad.degenerate and quad.area > 0.02 * (2 * scale) ** 2:
            return quad


def random_quad_pair(rng: random.Random) -> tuple[Polygon, Polygon]:
    """Two random quads with overlap odds skewed toward interesting cases."""
    a = random_simple_quad(rng)
    # Mostly nearby (plenty of partial overlap), sometimes far (disjoint).
    if rng.random() < 0.85:
        dx = rng.uniform(-120.0, 120.0)
        dy = rng.uniform(-120.0, 120.0)
    else:
        dx = rng.uniform(400.0, 700.0)
        dy = rng.uniform(-50.0, 50.0)
    b = random_simple_quad(rng, cx=250.0 + dx, cy=250.0 + dy, scale=rng.uniform(80.0, 220.0))
    return a, b


def oracle_agrees(
    exact: float,
    estimate: float,
    polys: list[Polygon],
    rel: float = 1e-2,
    floor_frac: float = 1e-3,
) -> bool:
    """Relative agreement with an ill-conditioning guard.

    A sampling oracle cannot resolve regions near its lattice granularity,
    so below a small fraction of the scene bounding box the comparison
    falls back to that absolute floor.
    """
    x0 = min(p.bounds[0] for p in polys)
    y0 = min(p.bounds[1] for p in polys)
    x1 = max(p.bounds[2] for p in polys)
    y1 = max(p.bounds[3] for p in polys)
    floor = floor_frac * (x1 - x0) * (y1 - y0)
    return abs(exact - estimate) <= max(rel * max(exact, estimate), floor)


def random_outlier_config(
    rng: random.Random,
) -> tuple[Polygon, Polygon, list[Polygon]]:
    """(detection, target, other ground truths) for outlier-area checks."""
    det = random_simple_quad(rng, scale=rng.uniform(150.0, 240.0))
    target = random_simple_quad(
        rng,
        cx=250.0 + rng.uniform(-80.0, 80.0),
        cy=250.0 + rng.uniform(-80.0, 80.0),
        scale=rng.uniform(60.0, 160.0),
    )
    others = [
        random_simple_quad(
            rng,
            cx=250.0 + rng.uniform(-220.0, 220.0),
            cy=250.0 + rng.uniform(-220.0, 220.0),
            scale=rng.uniform(40.0, 150.0),
        )
        for _ in range(rng.randint(1, 4))
    ]
    return det, target, others
