"""Dataset-level recall, precision and Hmean for each protocol.

Aggregation is micro-averaged: numerators and denominators are summed over
the whole dataset, then divided once.  ``MetricSummary`` therefore stores
the sums and derives the ratios, which makes per-image partial results
combinable with ``+`` in any order.

Empty-denominator conventions: an image with no detections has precision
0; an image with no ground truth has recall 1 and contributes nothing to
the dataset sums.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

from .matching import MatchConfig, MatchSet


def hmean(recall: float, precision: float) -> float:
    """Harmonic mean of recall and precision; 0 when both are 0."""
    if recall + precision == 0.0:
        return 0.0
    return 2.0 * recall * precision / (recall + precision)


@dataclass(frozen=True)
class MetricSummary:
    """Micro-averaged scores for one metric."""

    metric: str
    recall_sum: float
    precision_sum: float
    num_gt: int
    num_det: int

    @property
    def recall(self) -> float:
        return self.recall_sum / self.num_gt if self.num_gt > 0 else 1.0

    @property
    def precision(self) -> float:
        return self.precision_sum / self.num_det if self.num_det > 0 else 0.0

    @property
    def hmean(self) -> float:
        return hmean(self.recall, self.precision)

    def __add__(self, other: "MetricSummary") -> "MetricSummary":
        if other.metric != self.metric:
            raise ValueError(f"cannot combine {self.metric!r} with {other.metric!r}")
        return MetricSummary(
            self.metric,
            self.recall_sum + other.recall_sum,
            self.precision_sum + other.precision_sum,
            self.num_gt + other.num_gt,
            self.num_det + other.num_det,
        )

    def as_dict(self) -> dict:
        return {
            "recall": self.recall,
            "precision": self.precision,
            "hmean": self.hmean,
            "recall_sum": self.recall_sum,
            "precision_sum": self.precision_sum,
            "num_gt": self.num_gt,
            "num_det": self.num_det,
        }


def binary_scores(matchset: MatchSet, metric: str = "iou") -> MetricSummary:
    """Hit-or-miss counting over a one-to-one matchset."""
    matched = len(matchset.pairs)
    return MetricSummary(metric, float(matched), float(matched), matchset.num_gt, matchset.num_det)


def siou_scores(matchset: MatchSet) -> MetricSummary:
    """Sum matched IoU values instead of counting hits."""
    total = sum(p.score.iou for p in matchset.pairs)
    return MetricSummary("siou", total, total, matchset.num_gt, matchset.num_det)


def tiou_scores(
    matchset: MatchSet,
    *,
    extra_recall: float = 0.0,
    extra_precision: float = 0.0,
    num_gt: int | None = None,
    num_det: int | None = None,
) -> MetricSummary:
    """Sum matched TIoU values; ``extra_*`` carry joint-line contributions.

    The joint protocol scores some items against text-line annotations
    before the word pass; those terms enter the same sums here, with the
    denominators overridden to the original word and detection counts.
    """
    recall_total = sum(p.score.tiou_recall for p in matchset.pairs) + extra_recall
    precision_total = sum(p.score.tiou_precision for p in matchset.pairs) + extra_precision
    return MetricSummary(
        "tiou",
        recall_total,
        precision_total,
        matchset.num_gt if num_gt is None else num_gt,
        matchset.num_det if num_det is None else num_det,
    )


def deteval_scores(matchset: MatchSet, cfg: MatchConfig, metric: str = "deteval") -> MetricSummary:
    """Score a staged matchset with the one-to-many / many-to-one constants."""
    recall_total = float(len(matchset.pairs))
    precision_total = float(len(matchset.pairs))
    for group in matchset.om_groups:
        recall_total += cfg.om_score
        precision_total += cfg.om_score * len(group.det_ids)
    for group in matchset.mo_groups:
        recall_total += cfg.mo_score * len(group.gt_ids)
        precision_total += cfg.mo_score
    return MetricSummary(metric, recall_total, precision_total, matchset.num_gt, matchset.num_det)


def ic03_scores(
    gt_best: Mapping[int, float], det_best: Mapping[int, float]
) -> MetricSummary:
    """Average the per-item best-match values."""
    return MetricSummary(
        "ic03",
        float(sum(gt_best.values())),
        float(sum(det_best.values())),
        len(gt_best),
        len(det_best),
    )


def average_precision(
    detections: Iterable[tuple[float | None, bool]],
    num_gt: int,
    *,
    eleven_point: bool = False,
) -> float:
    """Interpolated average precision over confidence-ranked detections.

    ``detections`` holds (confidence, is-true-positive) entries for every
    non-don't-care detection in the dataset.  Sorting is stable, so callers
    control tie order by supplying entries in a deterministic sequence.
    All-points interpolation by default; the 11-point variant averages the
    precision envelope at recalls 0.0, 0.1, ..., 1.0.
    """
    entries = list(detections)
    for conf, _ in entries:
        if conf is None:
            raise ValueError(
                "average precision requires a confidence on every detection; "
                "use the confidence-free metrics (iou/siou/tiou/deteval/ic03) instead"
            )
    if num_gt <= 0 or not entries:
        return 0.0
    entries.sort(key=lambda e: -e[0])

    precisions: list[float] = []
    recalls: list[float] = []
    tp = 0
    for rank, (_, correct) in enumerate(entries, start=1):
        if correct:
            tp += 1
        precisions.append(tp / rank)
        recalls.append(tp / num_gt)

    # Precision envelope: best precision achievable at recall >= r.
    envelope = precisions.copy()
    for i in range(len(envelope) - 2, -1, -1):
        envelope[i] = max(envelope[i], envelope[i + 1])

    if eleven_point:
        total = 0.0
        for step in range(11):
            r = step / 10.0
            candidates = [p for p, rec in zip(envelope, recalls) if rec >= r]
            total += max(candidates) if candidates else 0.0
        return total / 11.0

    ap = 0.0
    prev_recall = 0.0
    for p, r in zip(envelope, recalls):
        if r > prev_recall:
            ap += (r - prev_recall) * p
            prev_recall = r
    return ap


def transcriptions_match(
    gt_text: str | None, det_text: str | None, *, case_sensitive: bool = False
) -> bool:
    """Exact transcription match after trimming surrounding whitespace."""
    if gt_text is None or det_text is None:
        return False
    a, b = gt_text.strip(), det_text.strip()
    if not case_sensitive:
        a, b = a.casefold(), b.casefold()
    return a == b


def end_to_end_scores(
    matchset: MatchSet,
    gt_texts: Mapping[int, str | None],
    det_texts: Mapping[int, str | None],
    *,
    case_sensitive: bool = False,
) -> MetricSummary:
    """Localization-gated exact-transcription scoring.

    Only pairs that passed the one-to-one localization gate can become
    true positives; a correct transcription on an unmatched detection
    still counts as a false positive.
    """
    tp = sum(
        1
        for pair in matchset.pairs
        if transcriptions_match(
            gt_texts.get(pair.gt_id),
            det_texts.get(pair.det_id),
            case_sensitive=case_sensitive,
        )
    )
    return MetricSummary("e2e", float(tp), float(tp), matchset.num_gt, matchset.num_det)
