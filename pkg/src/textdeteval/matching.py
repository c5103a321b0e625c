"""Detection-to-ground-truth assignment protocols.

Three families are implemented:

* greedy one-to-one IoU matching (the common IoU/SIoU/TIoU gate),
* repeated best-match scoring (the early information-retrieval style,
  which knowingly lets several detections match one ground truth),
* staged one-to-one / one-to-many / many-to-one matching with coverage
  thresholds, runnable in either historical stage order, since the order
  itself changes outcomes on crowded scenes.

All matching here is greedy and threshold-based on purpose: the goal is to
reproduce the published protocols, not to improve on them with optimal
assignment.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

from .annotations import Detection, GtInstance
from .geometry import bounds_overlap, intersection_area
from .pair_scores import PairScore, score_pair

log = logging.getLogger(__name__)


class MatchOrder(enum.Enum):
    """Stage order for the staged protocol."""

    OO_FIRST = "ic13"  # one-to-one, then one-to-many, then many-to-one
    OM_MO_FIRST = "deteval"  # one-to-many and many-to-one before one-to-one


@dataclass(frozen=True)
class MatchConfig:
    """Thresholds and scoring constants shared by the matchers.

    ``tp`` has no published value; 0.4 is the conventional default and is
    exposed as a flag, as is ``tr``.  Comparisons are strict (``>``) by
    default; set ``inclusive_thresholds`` for ``>=`` compatibility studies.
    """

    iou_threshold: float = 0.5
    tr: float = 0.8
    tp: float = 0.4
    order: MatchOrder = MatchOrder.OO_FIRST
    om_score: float = 0.8
    mo_score: float = 1.0
    dont_care_overlap: float = 0.5
    inclusive_thresholds: bool = False

    def __post_init__(self) -> None:
        for name in ("iou_threshold", "tr", "tp", "om_score", "mo_score", "dont_care_overlap"):
            value = getattr(self, name)
            if not 0.0 < value <= 1.0:
                raise ValueError(f"{name} must be in (0, 1], got {value}")

    def exceeds(self, value: float, threshold: float) -> bool:
        return value >= threshold if self.inclusive_thresholds else value > threshold


class MatchedPair(NamedTuple):
    gt_id: int
    det_id: int
    score: PairScore


class OneToManyGroup(NamedTuple):
    gt_id: int
    det_ids: tuple[int, ...]


class ManyToOneGroup(NamedTuple):
    det_id: int
    gt_ids: tuple[int, ...]


@dataclass
class MatchSet:
    """Outcome of matching one image.

    Every non-don't-care detection id lands in exactly one of ``pairs``,
    ``om_groups``, ``mo_groups`` or ``unmatched_det``; ground-truth ids are
    partitioned the same way.  One-to-one results never repeat an id.
    """

    pairs: list[MatchedPair] = field(default_factory=list)
    om_groups: list[OneToManyGroup] = field(default_factory=list)
    mo_groups: list[ManyToOneGroup] = field(default_factory=list)
    unmatched_gt: list[int] = field(default_factory=list)
    unmatched_det: list[int] = field(default_factory=list)
    dont_care_det: list[int] = field(default_factory=list)

    @property
    def num_gt(self) -> int:
        return (
            len(self.pairs)
            + len(self.om_groups)
            + sum(len(g.gt_ids) for g in self.mo_groups)
            + len(self.unmatched_gt)
        )

    @property
    def num_det(self) -> int:
        return (
            len(self.pairs)
            + sum(len(g.det_ids) for g in self.om_groups)
            + len(self.mo_groups)
            + len(self.unmatched_det)
        )


def filter_dont_care(
    dets: Sequence[Detection],
    dont_care_gts: Sequence[GtInstance],
    threshold: float,
) -> list[int]:
    """Ids of detections lying mostly inside some don't-care region.

    A detection is marked when its overlap ratio with a single don't-care
    ground truth exceeds ``threshold``.
    """
    marked: list[int] = []
    for det in dets:
        if det.polygon.area <= 0.0:
            continue
        for gt in dont_care_gts:
            if not bounds_overlap(det.polygon, gt.polygon):
                continue
            ratio = intersection_area(gt.polygon, det.polygon) / det.polygon.area
            if ratio > threshold:
                marked.append(det.id)
                break
    return marked


def _iou_candidates(
    gts: Sequence[GtInstance], dets: Sequence[Detection]
) -> dict[tuple[int, int], float]:
    """IoU for every (gt, det) pair whose bounding boxes overlap."""
    out: dict[tuple[int, int], float] = {}
    for gt in gts:
        for det in dets:
            if not bounds_overlap(gt.polygon, det.polygon):
                continue
            inter = intersection_area(gt.polygon, det.polygon)
            union = gt.polygon.area + det.polygon.area - inter
            if union > 0.0:
                out[(gt.id, det.id)] = inter / union
    return out


def match_one_to_one(
    gts: Sequence[GtInstance],
    dets: Sequence[Detection],
    cfg: MatchConfig,
    outlier_pool: Sequence[GtInstance] | None = None,
) -> MatchSet:
    """Greedy one-to-one matching above the IoU threshold.

    Inputs must already exclude don't-care ground truth and don't-care
    detections.  When every detection carries a confidence, pairs are
    accepted in descending confidence order (each detection taking the
    best remaining ground truth); otherwise in descending IoU order.  Ties
    break toward the lower detection id, then the lower ground-truth id,
    which makes the result independent of input order.

    ``outlier_pool`` overrides the ground-truth set used for the outlier
    penalty of accepted pairs; by default the other entries of ``gts``
    serve that role.
    """
    ious = _iou_candidates(gts, dets)
    gts_by_id = {gt.id: gt for gt in gts}
    dets_by_id = {det.id: det for det in dets}

    with_conf = [d for d in dets if d.confidence is not None]
    use_confidence = bool(dets) and len(with_conf) == len(dets)
    if with_conf and not use_confidence:
        log.warning(
            "mixed confidence presence (%d of %d detections); falling back to IoU-greedy",
            len(with_conf),
            len(dets),
        )

    matched: list[tuple[int, int]] = []
    taken_gt: set[int] = set()
    taken_det: set[int] = set()

    if use_confidence:
        for det in sorted(dets, key=lambda d: (-float(d.confidence), d.id)):
            best: tuple[float, int] | None = None
            for gt in gts:
                if gt.id in taken_gt:
                    continue
                iou_val = ious.get((gt.id, det.id), 0.0)
                if not cfg.exceeds(iou_val, cfg.iou_threshold):
                    continue
                if best is None or (-iou_val, gt.id) < best:
                    best = (-iou_val, gt.id)
            if best is not None:
                gt_id = best[1]
                matched.append((gt_id, det.id))
                taken_gt.add(gt_id)
                taken_det.add(det.id)
    else:
        candidates = [
            (-iou_val, det_id, gt_id)
            for (gt_id, det_id), iou_val in ious.items()
            if cfg.exceeds(iou_val, cfg.iou_threshold)
        ]
        for _, det_id, gt_id in sorted(candidates):
            if gt_id in taken_gt or det_id in taken_det:
                continue
            matched.append((gt_id, det_id))
            taken_gt.add(gt_id)
            taken_det.add(det_id)

    pool = list(outlier_pool) if outlier_pool is not None else list(gts)
    pairs = []
    for gt_id, det_id in sorted(matched):
        others = [g.polygon for g in pool if g.id != gt_id and not g.dont_care]
        pairs.append(
            MatchedPair(
                gt_id,
                det_id,
                score_pair(gts_by_id[gt_id].polygon, dets_by_id[det_id].polygon, others),
            )
        )
    return MatchSet(
        pairs=pairs,
        unmatched_gt=sorted(g.id for g in gts if g.id not in taken_gt),
        unmatched_det=sorted(d.id for d in dets if d.id not in taken_det),
    )


def match_ic03(
    gts: Sequence[GtInstance], dets: Sequence[Detection]
) -> tuple[dict[int, float], dict[int, float]]:
    """Best match value per ground truth and per detection.

    Repeated matching is allowed by design: two detections that both fit
    one ground truth both score 1.0.  That loophole is this protocol's
    defining weakness and is preserved faithfully.
    """
    from .pair_scores import ic03_match_value

    gt_best = {gt.id: 0.0 for gt in gts}
    det_best = {det.id: 0.0 for det in dets}
    for gt in gts:
        for det in dets:
            if not bounds_overlap(gt.polygon, det.polygon):
                continue
            value = ic03_match_value(gt.polygon, det.polygon)
            if value > gt_best[gt.id]:
                gt_best[gt.id] = value
            if value > det_best[det.id]:
                det_best[det.id] = value
    return gt_best, det_best


def match_deteval(
    gts: Sequence[GtInstance], dets: Sequence[Detection], cfg: MatchConfig
) -> MatchSet:
    """Staged coverage-threshold matching in the configured stage order.

    A one-to-one pair requires mutual coverage above (tr, tp) and row and
    column uniqueness among still-unconsumed items.  A one-to-many group
    needs at least two contributing detections, each mostly inside the
    ground truth, whose summed intersections cover it; many-to-one is the
    mirror image.  Every item is consumed by at most one stage, which is
    exactly why the stage order is observable.
    """
    inter: dict[tuple[int, int], float] = {}
    for gt in gts:
        for det in dets:
            if bounds_overlap(gt.polygon, det.polygon):
                value = intersection_area(gt.polygon, det.polygon)
                if value > 0.0:
                    inter[(gt.id, det.id)] = value

    gts_by_id = {gt.id: gt for gt in gts}
    dets_by_id = {det.id: det for det in dets}
    gt_area = {gt.id: gt.polygon.area for gt in gts}
    det_area = {det.id: det.polygon.area for det in dets}

    def sigma(gi: int, dj: int) -> float:
        return inter.get((gi, dj), 0.0) / gt_area[gi] if gt_area[gi] > 0.0 else 0.0

    def tau(gi: int, dj: int) -> float:
        return inter.get((gi, dj), 0.0) / det_area[dj] if det_area[dj] > 0.0 else 0.0

    def qualifies(gi: int, dj: int) -> bool:
        return cfg.exceeds(sigma(gi, dj), cfg.tr) and cfg.exceeds(tau(gi, dj), cfg.tp)

    remaining_gt = [gt.id for gt in gts]
    remaining_det = [det.id for det in dets]
    result = MatchSet()

    def run_oo() -> None:
        accepted: list[tuple[int, int]] = []
        for gi in remaining_gt:
            row = [dj for dj in remaining_det if qualifies(gi, dj)]
            if len(row) != 1:
                continue
            dj = row[0]
            col = [gk for gk in remaining_gt if qualifies(gk, dj)]
            if col == [gi]:
                accepted.append((gi, dj))
        for gi, dj in accepted:
            others = [g.polygon for g in gts if g.id != gi]
            result.pairs.append(
                MatchedPair(gi, dj, score_pair(gts_by_id[gi].polygon, dets_by_id[dj].polygon, others))
            )
            remaining_gt.remove(gi)
            remaining_det.remove(dj)

    def run_om() -> None:
        for gi in list(remaining_gt):
            contrib = [dj for dj in remaining_det if cfg.exceeds(tau(gi, dj), cfg.tp)]
            if len(contrib) < 2:
                continue
            covered = sum(inter.get((gi, dj), 0.0) for dj in contrib)
            if gt_area[gi] > 0.0 and cfg.exceeds(covered / gt_area[gi], cfg.tr):
                result.om_groups.append(OneToManyGroup(gi, tuple(contrib)))
                remaining_gt.remove(gi)
                for dj in contrib:
                    remaining_det.remove(dj)

    def run_mo() -> None:
        for dj in list(remaining_det):
            covered_gts = [gi for gi in remaining_gt if cfg.exceeds(sigma(gi, dj), cfg.tr)]
            if len(covered_gts) < 2:
                continue
            captured = sum(inter.get((gi, dj), 0.0) for gi in covered_gts)
            if det_area[dj] > 0.0 and cfg.exceeds(captured / det_area[dj], cfg.tp):
                result.mo_groups.append(ManyToOneGroup(dj, tuple(covered_gts)))
                remaining_det.remove(dj)
                for gi in covered_gts:
                    remaining_gt.remove(gi)

    if cfg.order is MatchOrder.OO_FIRST:
        run_oo()
        run_om()
        run_mo()
    else:
        run_om()
        run_mo()
        run_oo()

    result.pairs.sort()
    result.unmatched_gt = sorted(remaining_gt)
    result.unmatched_det = sorted(remaining_det)
    return result
