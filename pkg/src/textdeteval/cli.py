"""Command-line front end.

Subcommands:

* ``evaluate`` scores a detection archive against ground truth under the
  selected metrics, optionally running the joint word/text-line protocol.
* ``demo`` rebuilds the canonical synthetic demonstrations and prints a
  metric comparison table.
* ``synth`` writes a seeded random corpus in the annotation text formats.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__, harness
from .annotations import AnnotationFormatError, DONT_CARE_SENTINEL, load_dataset
from .evaluate import EvalOptions, METRIC_CHOICES, evaluate_dataset
from .geometry import InvalidPolygonError
from .joint import LineIndexError
from .matching import MatchConfig, MatchOrder
from .report import build_report, emit_report

log = logging.getLogger("textdeteval")


def _add_match_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--iou-threshold", type=float, default=0.5,
                        help="IoU needed for a one-to-one match (default 0.5)")
    parser.add_argument("--tr", type=float, default=0.8,
                        help="coverage-of-ground-truth threshold for staged matching (default 0.8)")
    parser.add_argument("--tp", type=float, default=0.4,
                        help="coverage-of-detection threshold for staged matching (default 0.4)")
    parser.add_argument("--order", choices=["ic13", "deteval"], default="ic13",
                        help="stage order for staged matching outside the explicit metrics")
    parser.add_argument("--om-score", type=float, default=0.8,
                        help="score granted per item in a one-to-many group (default 0.8)")
    parser.add_argument("--mo-score", type=float, default=1.0,
                        help="score granted per item in a many-to-one group (default 1.0)")
    parser.add_argument("--dont-care-overlap", type=float, default=0.5,
                        help="detection overlap ratio with don't-care regions above which it is ignored")
    parser.add_argument("--inclusive-thresholds", action="store_true",
                        help="compare thresholds with >= instead of the default strict >")


def _match_config(args: argparse.Namespace) -> MatchConfig:
    return MatchConfig(
        iou_threshold=args.iou_threshold,
        tr=args.tr,
        tp=args.tp,
        order=MatchOrder.OO_FIRST if args.order == "ic13" else MatchOrder.OM_MO_FIRST,
        om_score=args.om_score,
        mo_score=args.mo_score,
        dont_care_overlap=args.dont_care_overlap,
        inclusive_thresholds=args.inclusive_thresholds,
    )


def _write_output(data: bytes, path: str | None) -> None:
    if path is None or path == "-":
        sys.stdout.buffer.write(data)
        sys.stdout.buffer.flush()
    else:
        Path(path).write_bytes(data)


def _cmd_evaluate(args: argparse.Namespace) -> int:
    if args.joint and args.lines is None:
        log.error("--joint requires --lines")
        return 2
    metrics = tuple(m.strip() for m in args.metrics.split(",") if m.strip())
    try:
        opts = EvalOptions(
            metrics=metrics,
            match=_match_config(args),
            joint=args.joint,
            case_sensitive=args.case_sensitive,
            eleven_point_ap=args.eleven_point_ap,
        )
    except ValueError as exc:
        log.error("%s", exc)
        return 2

    try:
        records, load_warnings = load_dataset(
            args.gt,
            args.det,
            args.lines,
            gt_format=args.gt_format,
            det_layout=args.det_layout,
            gt_pattern=args.gt_pattern,
            det_pattern=args.det_pattern,
            line_pattern=args.line_pattern,
            sentinel=args.sentinel,
        )
        dataset = evaluate_dataset(records, opts, workers=args.workers)
    except (AnnotationFormatError, InvalidPolygonError, LineIndexError, ValueError) as exc:
        log.error("%s", exc)
        return 1

    dataset.warnings = load_warnings + dataset.warnings
    for warning in dataset.warnings:
        log.warning("%s", warning)
    if args.strict_formats and dataset.warnings:
        log.error("aborting: %d warning(s) under --strict-formats", len(dataset.warnings))
        return 1

    config_echo = {
        "gt": str(args.gt),
        "det": str(args.det),
        "lines": str(args.lines) if args.lines else None,
        "joint": args.joint,
        "metrics": sorted(metrics),
        "gt_format": args.gt_format,
        "det_layout": str(args.det_layout),
        "sentinel": args.sentinel,
        "iou_threshold": args.iou_threshold,
        "tr": args.tr,
        "tp": args.tp,
        "order": args.order,
        "om_score": args.om_score,
        "mo_score": args.mo_score,
        "dont_care_overlap": args.dont_care_overlap,
        "inclusive_thresholds": args.inclusive_thresholds,
        "case_sensitive": args.case_sensitive,
        "eleven_point_ap": args.eleven_point_ap,
    }
    report = build_report(dataset, opts, config_echo, per_image=args.per_image)
    try:
        data = emit_report(report, args.format)
    except ValueError as exc:
        log.error("%s", exc)
        return 2
    _write_output(data, args.report)
    return 0


def _cmd_demo(args: argparse.Namespace) -> int:
    from .geometry import rectangle

    gt = rectangle(0.0, 0.0, 100.0, 20.0)
    try:
        scenes = harness.make_equal_iou_quartet(gt, args.iou_target)
    except harness.InfeasibleSceneError as exc:
        log.error("%s", exc)
        return 2
    scenes.append(harness.make_oversegmentation_scene())
    scenes.append(harness.make_order_pathology_scene())
    if args.dump:
        harness.dump_scenes(scenes, args.dump)
        log.info("scenes written to %s", args.dump)

    rows = harness.compare_metrics(scenes)
    if args.format == "json":
        import json

        _write_output(
            (json.dumps(rows, sort_keys=True, indent=2) + "\n").encode(), args.report
        )
        return 0
    header = f"{'scene':<28}{'iou':>8}{'siou':>8}{'tiou':>8}{'deteval':>9}{'ic03':>8}"
    lines = [header, "-" * len(header)]
    for row in rows:
        lines.append(
            f"{row['scene']:<28}{row['iou']:>8.4f}{row['siou']:>8.4f}"
            f"{row['tiou']:>8.4f}{row['deteval']:>9.4f}{row['ic03']:>8.4f}"
        )
    _write_output(("\n".join(lines) + "\n").encode(), args.report)
    return 0


def _cmd_synth(args: argparse.Namespace) -> int:
    scenes = harness.make_random_corpus(
        args.count, seed=args.seed, with_confidence=args.with_confidence or None
    )
    layout = "quad+conf" if args.with_confidence else "quad"
    harness.dump_scenes(scenes, args.out, det_layout=layout)
    log.info("wrote %d scenes to %s", len(scenes), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="textdeteval",
        description="Scene-text detection evaluation under IoU, SIoU, TIoU, "
        "staged (DetEval-style), best-match (IC03-style), AP and "
        "end-to-end protocols.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    ev = sub.add_parser("evaluate", help="score detections against ground truth")
    ev.add_argument("--gt", required=True, help="ground-truth directory or zip")
    ev.add_argument("--det", required=True, help="detection directory or zip")
    ev.add_argument("--lines", default=None, help="text-line annotation directory or zip")
    ev.add_argument("--joint", action="store_true",
                    help="run the joint word/text-line protocol (requires --lines)")
    ev.add_argument("--metrics", default="iou,tiou",
                    help=f"comma-separated subset of {','.join(METRIC_CHOICES)}")
    ev.add_argument("--gt-format", choices=["icdar15-quad", "icdar13-rect"],
                    default="icdar15-quad")
    ev.add_argument("--det-layout", default="quad",
                    help="detection columns: quad|rect with optional +conf and +text, "
                         "e.g. quad+conf+text")
    ev.add_argument("--gt-pattern", default="gt_{key}.txt")
    ev.add_argument("--det-pattern", default="res_{key}.txt")
    ev.add_argument("--line-pattern", default="line_{key}.txt")
    ev.add_argument("--sentinel", default=DONT_CARE_SENTINEL,
                    help="transcription marking a don't-care region")
    _add_match_flags(ev)
    ev.add_argument("--case-sensitive", action="store_true",
                    help="end-to-end transcription comparison respects case")
    ev.add_argument("--eleven-point-ap", action="store_true",
                    help="use 11-point interpolation for average precision")
    ev.add_argument("--per-image", action="store_true",
                    help="include per-image match details in the report")
    ev.add_argument("--workers", type=int, default=1, help="worker process count")
    ev.add_argument("--strict-formats", action="store_true",
                    help="treat any input warning as an error")
    ev.add_argument("--report", default=None, help="report path (default stdout)")
    ev.add_argument("--format", default="json", help="report format: json or text")
    ev.set_defaults(func=_cmd_evaluate)

    demo = sub.add_parser("demo", help="run the synthetic demonstrations")
    demo.add_argument("--iou-target", type=float, default=2.0 / 3.0)
    demo.add_argument("--dump", default=None, help="also write the scenes to this directory")
    demo.add_argument("--report", default=None, help="output path (default stdout)")
    demo.add_argument("--format", default="text", choices=["text", "json"])
    demo.set_defaults(func=_cmd_demo)

    synth = sub.add_parser("synth", help="generate a seeded random corpus")
    synth.add_argument("--out", required=True, help="output directory")
    synth.add_argument("--count", type=int, default=50)
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--with-confidence", action="store_true",
                       help="give every detection a confidence column")
    synth.set_defaults(func=_cmd_synth)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(message)s",
    )
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
