"""Scores for a single (ground truth, detection) polygon pair.

TIoU-Recall discounts the plain IoU by the fraction of the ground truth the
detection fails to cover, so a detection that cuts characters off scores
lower than one that merely includes background.  TIoU-Precision discounts
by the fraction of the detection occupied by *other* ground-truth regions,
so a detection that swallows neighboring words scores lower than a clean
one, even at identical IoU.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .geometry import Polygon, intersection_area, outlier_area


@dataclass(frozen=True)
class PairScore:
    """All per-pair quantities used by the aggregation layer.

    ``gt_uncovered`` is the target ground-truth area the detection misses;
    ``outlier_overlap`` is the detection area covered by other ground-truth
    regions outside the target.  Both drive the TIoU penalties.
    """

    iou: float
    intersection: float
    gt_uncovered: float
    outlier_overlap: float
    tiou_recall: float
    tiou_precision: float


def iou(g: Polygon, d: Polygon) -> float:
    """Intersection over union of two polygons."""
    inter = intersection_area(g, d)
    union = g.area + d.area - inter
    return inter / union if union > 0.0 else 0.0


def coverage_ratios(g: Polygon, d: Polygon) -> tuple[float, float]:
    """(recall ratio A(g&d)/A(g), precision ratio A(g&d)/A(d))."""
    inter = intersection_area(g, d)
    recall_ratio = inter / g.area if g.area > 0.0 else 0.0
    precision_ratio = inter / d.area if d.area > 0.0 else 0.0
    return recall_ratio, precision_ratio


def ic03_match_value(a: Polygon, b: Polygon) -> float:
    """Best-match value 2*A(a&b)/(A(a)+A(b)); 1.0 for a perfect match."""
    denom = a.area + b.area
    return 2.0 * intersection_area(a, b) / denom if denom > 0.0 else 0.0


def tiou_recall(g: Polygon, d: Polygon) -> float:
    """IoU discounted by the uncovered fraction of the ground truth.

    Equals ``A(g&d)^2 / (A(g) * A(g|d))``; collapses to the plain IoU when
    the detection covers all of ``g``.
    """
    inter = intersection_area(g, d)
    union = g.area + d.area - inter
    if union <= 0.0 or g.area <= 0.0:
        return 0.0
    not_recalled = g.area - inter
    return inter * (1.0 - not_recalled / g.area) / union


def tiou_precision(g: Polygon, d: Polygon, others: Sequence[Polygon]) -> float:
    """IoU discounted by the detection area spent on outlier ground truth.

    ``others`` must exclude ``g`` itself and any don't-care regions; a
    don't-care region is not supposed to penalize anyone.  Outlier overlap
    that lies inside ``g`` is already discounted by the formula.
    """
    inter = intersection_area(g, d)
    union = g.area + d.area - inter
    if union <= 0.0 or d.area <= 0.0:
        return 0.0
    out = outlier_area(d, g, others)
    return inter * (1.0 - out / d.area) / union


def score_pair(g: Polygon, d: Polygon, others: Sequence[Polygon]) -> PairScore:
    """Compute the full pair record in one pass."""
    inter = intersection_area(g, d)
    union = g.area + d.area - inter
    if union <= 0.0:
        return PairScore(0.0, 0.0, g.area, 0.0, 0.0, 0.0)
    iou_val = inter / union
    uncovered = g.area - inter
    out = outlier_area(d, g, others)
    t_recall = inter * (1.0 - uncovered / g.area) / union if g.area > 0.0 else 0.0
    t_precision = inter * (1.0 - out / d.area) / union if d.area > 0.0 else 0.0
    return PairScore(iou_val, inter, uncovered, out, t_recall, t_precision)
