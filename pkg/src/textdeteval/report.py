"""Report assembly and serialization.

The JSON schema is stable and documented in the README; keys are sorted
and no timestamps or host details are embedded, so a report is
byte-identical across runs (and across worker counts) for fixed inputs
and flags.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from . import __version__
from .aggregate import MetricSummary
from .evaluate import DatasetEvalResult, EvalOptions, ImageEvalResult
from .joint import JointResult
from .matching import MatchSet


@dataclass
class EvalReport:
    """Machine-readable evaluation outcome."""

    version: str
    config: dict
    metrics: dict[str, dict]
    warnings: list[str] = field(default_factory=list)
    per_image: dict[str, dict] | None = None

    def to_dict(self) -> dict:
        out = {
            "tool": "textdeteval",
            "version": self.version,
            "config": self.config,
            "metrics": self.metrics,
            "warnings": self.warnings,
        }
        if self.per_image is not None:
            out["per_image"] = self.per_image
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "EvalReport":
        return cls(
            version=data["version"],
            config=data["config"],
            metrics=data["metrics"],
            warnings=data["warnings"],
            per_image=data.get("per_image"),
        )


def _matchset_dict(ms: MatchSet) -> dict:
    return {
        "pairs": [
            {
                "gt": p.gt_id,
                "det": p.det_id,
                "iou": p.score.iou,
                "intersection": p.score.intersection,
                "gt_uncovered": p.score.gt_uncovered,
                "outlier_overlap": p.score.outlier_overlap,
                "tiou_recall": p.score.tiou_recall,
                "tiou_precision": p.score.tiou_precision,
            }
            for p in ms.pairs
        ],
        "om_groups": [{"gt": g.gt_id, "dets": list(g.det_ids)} for g in ms.om_groups],
        "mo_groups": [{"det": g.det_id, "gts": list(g.gt_ids)} for g in ms.mo_groups],
        "unmatched_gt": list(ms.unmatched_gt),
        "unmatched_det": list(ms.unmatched_det),
        "dont_care_det": list(ms.dont_care_det),
    }


def _joint_dict(jr: JointResult) -> dict:
    return {
        "line_matches": [
            {
                "line": m.line_id,
                "det": m.det_id,
                "iou": m.iou,
                "tiou_precision": m.tiou_precision,
            }
            for m in jr.line_matches
        ],
        "word_credits": [
            {"word": c.word_id, "line": c.line_id, "det": c.det_id, "value": c.value}
            for c in jr.word_credits
        ],
        "demoted_words": list(jr.demoted_words),
        "extra_dont_care_det": list(jr.extra_dont_care_det),
        "word_stage": _matchset_dict(jr.word_matches),
    }


def _image_dict(image: ImageEvalResult) -> dict:
    out: dict = {
        "num_gt": image.num_gt,
        "num_det": image.num_det,
        "metrics": {m: s.as_dict() for m, s in image.summaries.items()},
    }
    if image.one_to_one is not None:
        out["one_to_one"] = _matchset_dict(image.one_to_one)
    for metric, ms in image.deteval.items():
        out[metric] = _matchset_dict(ms)
    if image.joint is not None:
        out["joint"] = _joint_dict(image.joint)
    return out


def summary_dict(summary: MetricSummary) -> dict:
    return summary.as_dict()


def build_report(
    dataset: DatasetEvalResult,
    opts: EvalOptions,
    config_echo: dict,
    *,
    per_image: bool = False,
) -> EvalReport:
    """Assemble the report for a finished dataset evaluation.

    ``config_echo`` should contain only semantic settings (paths, formats,
    thresholds); execution details such as worker counts must stay out so
    reports remain parallelism-independent.
    """
    metrics: dict[str, dict] = {m: s.as_dict() for m, s in dataset.summaries.items()}
    if dataset.ap is not None:
        num_gt = sum(i.num_gt for i in dataset.images)
        num_det = sum(i.num_det for i in dataset.images)
        metrics["ap"] = {
            "average_precision": dataset.ap,
            "num_gt": num_gt,
            "num_det": num_det,
        }
    report = EvalReport(
        version=__version__,
        config=config_echo,
        metrics=metrics,
        warnings=list(dataset.warnings),
    )
    if per_image:
        report.per_image = {i.image_id: _image_dict(i) for i in dataset.images}
    return report


def emit_report(report: EvalReport, fmt: str = "json") -> bytes:
    """Serialize a report as JSON (schema-stable) or a text table."""
    if fmt == "json":
        return (
            json.dumps(report.to_dict(), sort_keys=True, indent=2, ensure_ascii=False)
            + "\n"
        ).encode("utf-8")
    if fmt == "text":
        lines = [f"textdeteval {report.version}"]
        header = f"{'metric':<24}{'recall':>10}{'precision':>12}{'hmean':>10}{'num_gt':>9}{'num_det':>9}"
        lines.append(header)
        lines.append("-" * len(header))
        for metric in sorted(report.metrics):
            values = report.metrics[metric]
            if "average_precision" in values:
                lines.append(
                    f"{metric:<24}{values['average_precision']:>10.4f}"
                    f"{'':>12}{'':>10}{values['num_gt']:>9}{values['num_det']:>9}"
                )
            else:
                lines.append(
                    f"{metric:<24}{values['recall']:>10.4f}{values['precision']:>12.4f}"
                    f"{values['hmean']:>10.4f}{values['num_gt']:>9}{values['num_det']:>9}"
                )
        if report.warnings:
            lines.append("")
            lines.append(f"warnings ({len(report.warnings)}):")
            lines.extend(f"  {w}" for w in report.warnings)
        return ("\n".join(lines) + "\n").encode("utf-8")
    raise ValueError(f"unknown report format {fmt!r}; choose 'json' or 'text'")


def parse_report(data: bytes) -> EvalReport:
    """Inverse of the JSON emitter."""
    return EvalReport.from_dict(json.loads(data.decode("utf-8")))
