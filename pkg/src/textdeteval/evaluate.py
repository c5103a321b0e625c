"""Per-image and dataset-level evaluation drivers.

``evaluate_image`` is a pure function of (record, options), so images can
be evaluated by a process pool of any size; the dataset reduce folds
per-image partial sums in image-id order, making reports deterministic
regardless of parallelism.
"""

from __future__ import annotations

import dataclasses
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

from . import aggregate
from .aggregate import MetricSummary
from .annotations import Detection, GtInstance, ImageRecord
from .joint import JointResult, LineAnnotation, build_line_index, evaluate_joint
from .matching import MatchConfig, MatchOrder, MatchSet, filter_dont_care, match_deteval, match_ic03, match_one_to_one

METRIC_CHOICES = (
    "iou",
    "siou",
    "tiou",
    "ic03",
    "deteval-ic13-order",
    "deteval-deteval-order",
    "ap",
    "e2e",
)

JOINT_METRICS = ("iou", "tiou")

_ONE_TO_ONE_METRICS = {"iou", "siou", "tiou", "ap", "e2e"}


@dataclass(frozen=True)
class EvalOptions:
    """What to compute and with which thresholds."""

    metrics: tuple[str, ...] = ("iou", "tiou")
    match: MatchConfig = field(default_factory=MatchConfig)
    joint: bool = False
    case_sensitive: bool = False
    eleven_point_ap: bool = False

    def __post_init__(self) -> None:
        if not self.metrics:
            raise ValueError("select at least one metric")
        unknown = [m for m in self.metrics if m not in METRIC_CHOICES]
        if unknown:
            raise ValueError(f"unknown metrics {unknown!r}; choose from {METRIC_CHOICES}")
        if self.joint:
            bad = [m for m in self.metrics if m not in JOINT_METRICS]
            if bad:
                raise ValueError(
                    f"joint mode supports metrics {JOINT_METRICS}, not {bad!r}"
                )


@dataclass
class ImageEvalResult:
    """Everything computed for one image."""

    image_id: str
    num_gt: int
    num_det: int
    summaries: dict[str, MetricSummary]
    one_to_one: MatchSet | None = None
    deteval: dict[str, MatchSet] = field(default_factory=dict)
    joint: JointResult | None = None
    # (confidence, is-true-positive) per live detection, in id order.
    ap_entries: list[tuple[float | None, bool]] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)


def _prepare(record: ImageRecord, cfg: MatchConfig) -> tuple[
    list[GtInstance], list[Detection], list[int], list[str]
]:
    """Demote degenerate ground truth, drop degenerate detections, mark don't-care."""
    warnings: list[str] = []
    gts: list[GtInstance] = []
    for gt in record.gts:
        if gt.polygon.degenerate and not gt.dont_care:
            warnings.append(
                f"image {record.image_id!r}: degenerate ground truth {gt.id} demoted to don't-care"
            )
            gt = dataclasses.replace(gt, dont_care=True)
        gts.append(gt)
    dets: list[Detection] = []
    for det in record.dets:
        if det.polygon.degenerate:
            warnings.append(
                f"image {record.image_id!r}: degenerate detection {det.id} dropped"
            )
            continue
        dets.append(det)
    dc_gts = [g for g in gts if g.dont_care]
    dc_det_ids = filter_dont_care(dets, dc_gts, cfg.dont_care_overlap)
    return gts, dets, dc_det_ids, warnings


def evaluate_image(record: ImageRecord, opts: EvalOptions) -> ImageEvalResult:
    """Evaluate one image under every requested metric."""
    cfg = opts.match
    gts, dets, dc_det_ids, warnings = _prepare(record, cfg)
    live_gts = [g for g in gts if not g.dont_care]
    live_dets = [d for d in dets if d.id not in dc_det_ids]

    result = ImageEvalResult(
        image_id=record.image_id,
        num_gt=len(live_gts),
        num_det=len(live_dets),
        summaries={},
        warnings=warnings,
    )

    if opts.joint:
        lines = [l for l in record.lines if not l.dont_care and not l.polygon.degenerate]
        if record.line_members is not None:
            # Explicit sidecar memberships; don't-care and unknown word ids
            # are dropped, and a line still needs two live members.
            live_ids = {g.id for g in gts if not g.dont_care}
            index = []
            for l in lines:
                members = tuple(
                    w for w in record.line_members.get(l.id, ()) if w in live_ids
                )
                if len(members) >= 2:
                    index.append(LineAnnotation(l.id, l.polygon, members))
                else:
                    result.warnings.append(
                        f"image {record.image_id!r}: line {l.id} dropped: "
                        f"only {len(members)} member word(s)"
                    )
        else:
            index, index_warnings = build_line_index(gts, lines)
            result.warnings.extend(
                f"image {record.image_id!r}: {w}" for w in index_warnings
            )
        joint = evaluate_joint(gts, index, dets, cfg, dont_care_det=dc_det_ids)
        result.joint = joint
        result.num_det = joint.num_det
        if "iou" in opts.metrics:
            result.summaries["iou"] = joint.iou_summary()
        if "tiou" in opts.metrics:
            result.summaries["tiou"] = joint.tiou_summary()
        return result

    if _ONE_TO_ONE_METRICS & set(opts.metrics):
        ms = match_one_to_one(live_gts, live_dets, cfg)
        ms.dont_care_det = sorted(dc_det_ids)
        result.one_to_one = ms
        if "iou" in opts.metrics:
            result.summaries["iou"] = aggregate.binary_scores(ms)
        if "siou" in opts.metrics:
            result.summaries["siou"] = aggregate.siou_scores(ms)
        if "tiou" in opts.metrics:
            result.summaries["tiou"] = aggregate.tiou_scores(ms)
        if "e2e" in opts.metrics:
            result.summaries["e2e"] = aggregate.end_to_end_scores(
                ms,
                {g.id: g.transcription for g in live_gts},
                {d.id: d.transcription for d in live_dets},
                case_sensitive=opts.case_sensitive,
            )
        if "ap" in opts.metrics:
            matched_dets = {p.det_id for p in ms.pairs}
            result.ap_entries = [
                (d.confidence, d.id in matched_dets) for d in live_dets
            ]

    if "ic03" in opts.metrics:
        gt_best, det_best = match_ic03(live_gts, live_dets)
        result.summaries["ic03"] = aggregate.ic03_scores(gt_best, det_best)

    for metric, order in (
        ("deteval-ic13-order", MatchOrder.OO_FIRST),
        ("deteval-deteval-order", MatchOrder.OM_MO_FIRST),
    ):
        if metric in opts.metrics:
            staged_cfg = dataclasses.replace(cfg, order=order)
            ms = match_deteval(live_gts, live_dets, staged_cfg)
            ms.dont_care_det = sorted(dc_det_ids)
            result.deteval[metric] = ms
            result.summaries[metric] = aggregate.deteval_scores(ms, staged_cfg, metric)

    return result


@dataclass
class DatasetEvalResult:
    summaries: dict[str, MetricSummary]
    ap: float | None
    images: list[ImageEvalResult]
    warnings: list[str]


def evaluate_dataset(
    records: Sequence[ImageRecord],
    opts: EvalOptions,
    workers: int = 1,
) -> DatasetEvalResult:
    """Evaluate all images and fold the partial sums in image-id order."""
    ordered = sorted(records, key=lambda r: r.image_id)
    if workers > 1 and len(ordered) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            images = list(pool.map(_eval_task, [(r, opts) for r in ordered], chunksize=8))
    else:
        images = [evaluate_image(r, opts) for r in ordered]

    summaries: dict[str, MetricSummary] = {}
    warnings: list[str] = []
    for image in images:
        warnings.extend(image.warnings)
        for metric, summary in image.summaries.items():
            if metric in summaries:
                summaries[metric] = summaries[metric] + summary
            else:
                summaries[metric] = summary

    ap_value: float | None = None
    if "ap" in opts.metrics:
        entries: list[tuple[float | None, bool]] = []
        total_gt = 0
        for image in images:
            entries.extend(image.ap_entries)
            total_gt += image.num_gt
        ap_value = aggregate.average_precision(
            entries, total_gt, eleven_point=opts.eleven_point_ap
        )

    return DatasetEvalResult(summaries=summaries, ap=ap_value, images=images, warnings=warnings)


def _eval_task(args: tuple[ImageRecord, EvalOptions]) -> ImageEvalResult:
    record, opts = args
    return evaluate_image(record, opts)
