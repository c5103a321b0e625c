"""Acceptance suite: every exit criterion, one test each, pass line printed.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines as they complete.
"""

from __future__ import annotations

import dataclasses
import json
import random
import time

import pytest

from conftest import oracle_agrees, random_outlier_config, random_quad_pair
from textdeteval.evaluate import EvalOptions, evaluate_image
from textdeteval.geometry import (
    intersection_area,
    outlier_area,
    rectangle,
    union_area,
)
from textdeteval.harness import (
    dump_scenes,
    make_equal_iou_quartet,
    make_line_scene,
    make_order_pathology_scene,
    make_oversegmentation_scene,
    make_random_corpus,
)
from textdeteval.matching import MatchConfig, MatchOrder, match_deteval
from textdeteval.raster import rasterized_area, region


def announce(number: int, label: str) -> None:
    print(f"criterion {number} ({label}): PASS")


def test_criterion_1_equal_iou_quartet():
    started = time.perf_counter()
    scenes = make_equal_iou_quartet(rectangle(0, 0, 100, 20), 2 / 3)
    opts = EvalOptions(metrics=("iou", "tiou"))
    results = {s.scene_id: evaluate_image(s.to_record(), opts) for s in scenes}

    binary = [
        (r.summaries["iou"].recall, r.summaries["iou"].precision, r.summaries["iou"].hmean)
        for r in results.values()
    ]
    for entry in binary[1:]:
        assert entry == binary[0]  # identical hit-or-miss scores

    tiou = {k: r.summaries["tiou"].hmean for k, r in results.items()}
    assert tiou["quartet_pure"] > tiou["quartet_cutting"]
    assert tiou["quartet_pure"] > tiou["quartet_outlier"]
    assert tiou["quartet_cutting_outlier"] == min(tiou.values())
    assert all(
        tiou["quartet_cutting_outlier"] < v
        for k, v in tiou.items()
        if k != "quartet_cutting_outlier"
    )

    # Cutting scene: relative recall decline equals the uncovered fraction.
    cut_pair = results["quartet_cutting"].one_to_one.pairs[0]
    gt_area = scenes[0].gts[0].polygon.area
    decline = (cut_pair.score.iou - cut_pair.score.tiou_recall) / cut_pair.score.iou
    assert decline == pytest.approx(cut_pair.score.gt_uncovered / gt_area, abs=1e-9)

    elapsed = time.perf_counter() - started
    assert elapsed < 1.0
    announce(1, f"equal-IoU quartet, {elapsed:.3f}s")


def test_criterion_2_oversegmentation_loophole():
    started = time.perf_counter()
    scene = make_oversegmentation_scene(k=20, extra_false_positives=3)
    opts = EvalOptions(metrics=("tiou", "deteval-ic13-order"))
    result = evaluate_image(scene.to_record(), opts)
    assert result.summaries["deteval-ic13-order"].precision == pytest.approx(
        20 * 0.8 / 23, abs=1e-6
    )
    assert result.summaries["tiou"].precision == 0.0
    elapsed = time.perf_counter() - started
    assert elapsed < 1.0
    announce(2, f"over-segmentation loophole, {elapsed:.3f}s")


def test_criterion_3_geometry_oracle_suite():
    started = time.perf_counter()
    rng = random.Random(20240917)
    checked = 0
    for _ in range(1000):
        a, b = random_quad_pair(rng)
        inter = intersection_area(a, b)
        union = union_area(a, b)
        assert oracle_agrees(inter, rasterized_area(region(a) & region(b), 1024), [a, b])
        assert oracle_agrees(union, rasterized_area(region(a) | region(b), 1024), [a, b])
        checked += 1
    for _ in range(200):
        det, target, others = random_outlier_config(rng)
        expr = None
        for o in others:
            leaf = region(o) & region(det)
            expr = leaf if expr is None else expr | leaf
        expr = expr - region(target)
        exact = outlier_area(det, target, others)
        assert oracle_agrees(exact, rasterized_area(expr, 1024), [det, target, *others])
        checked += 1
    elapsed = time.perf_counter() - started
    assert checked == 1200
    assert elapsed < 60.0
    announce(3, f"geometry vs sampling oracle on {checked} configs, {elapsed:.1f}s")


def test_criterion_4_metric_ordering_on_random_corpus():
    scenes = make_random_corpus(500, seed=77)
    opts = EvalOptions(metrics=("iou", "siou", "tiou"))
    violations = 0
    strict_checks = 0
    for scene in scenes:
        result = evaluate_image(scene.to_record(), opts)
        h_iou = result.summaries["iou"].hmean
        h_siou = result.summaries["siou"].hmean
        h_tiou = result.summaries["tiou"].hmean
        if not (h_tiou <= h_siou + 1e-12 and h_siou <= h_iou + 1e-12):
            violations += 1
        pairs = result.one_to_one.pairs
        if any(p.score.iou < 1.0 - 1e-9 for p in pairs):
            strict_checks += 1
            assert h_siou < h_iou
        if any(
            p.score.gt_uncovered > 1e-9 or p.score.outlier_overlap > 1e-9
            for p in pairs
        ):
            assert h_tiou < h_siou
    assert violations == 0
    assert strict_checks > 100  # the corpus genuinely exercises the strict case
    announce(4, f"tiou <= siou <= iou over {len(scenes)} images, 0 violations")


def test_criterion_5_joint_protocol_property():
    word_opts = EvalOptions(metrics=("iou", "tiou"))
    joint_opts = EvalOptions(metrics=("iou", "tiou"), joint=True)

    # Line-level detections: joint recall must strictly beat word-only.
    improvements = 0
    for seed in range(12):
        scene = make_line_scene(seed, n_lines=3, detect="lines")
        record = scene.to_record()
        word_recall = evaluate_image(record, word_opts).summaries["iou"].recall
        joint_recall = evaluate_image(record, joint_opts).summaries["iou"].recall
        assert joint_recall > word_recall
        improvements += 1

    # Word-level detections only: the two modes agree bit for bit.
    for seed in range(12):
        scene = make_line_scene(100 + seed, n_lines=3, detect="words")
        record = scene.to_record()
        word_result = evaluate_image(record, word_opts)
        joint_result = evaluate_image(record, joint_opts)
        assert joint_result.joint.line_matches == []  # stage 1 matched nothing
        word_bytes = json.dumps(
            {m: s.as_dict() for m, s in sorted(word_result.summaries.items())}
        ).encode()
        joint_bytes = json.dumps(
            {m: s.as_dict() for m, s in sorted(joint_result.summaries.items())}
        ).encode()
        assert word_bytes == joint_bytes
    announce(5, f"joint protocol beats word-only on {improvements} line scenes, "
                "matches it bit-for-bit without line detections")


def test_criterion_6_matching_order_pathology():
    scene = make_order_pathology_scene()
    cfg = MatchConfig()
    oo_first = match_deteval(scene.gts, scene.dets, cfg)
    om_mo_first = match_deteval(
        scene.gts, scene.dets, dataclasses.replace(cfg, order=MatchOrder.OM_MO_FIRST)
    )
    assert (oo_first.pairs, oo_first.om_groups, oo_first.mo_groups) != (
        om_mo_first.pairs,
        om_mo_first.om_groups,
        om_mo_first.mo_groups,
    )
    # One-to-one first: the long detection cannot satisfy many-to-one
    # because the tight detection already consumed a word, so it ends up a
    # false positive and the remaining word is unrecalled.
    assert oo_first.mo_groups == []
    assert oo_first.unmatched_det == [1]
    assert oo_first.unmatched_gt == [1]
    # Group stages first: the long detection collects both words.
    assert om_mo_first.mo_groups and set(om_mo_first.mo_groups[0].gt_ids) == {0, 1}
    announce(6, "stage order changes the match set, long detection blocked")


def test_criterion_7_partial_line_worked_example():
    from textdeteval.annotations import Detection, GtInstance, LINE
    from textdeteval.joint import build_line_index, evaluate_joint

    words = [
        GtInstance(id=0, polygon=rectangle(0, 0, 90, 20)),
        GtInstance(id=1, polygon=rectangle(110, 0, 200, 20)),
    ]
    lines = [GtInstance(id=0, polygon=rectangle(0, 0, 200, 20), granularity=LINE)]
    index, _ = build_line_index(words, lines)
    det = Detection(id=0, polygon=rectangle(0, 0, 150, 20))
    result = evaluate_joint(words, index, [det], MatchConfig())
    credits = {c.word_id: c.value for c in result.word_credits}
    assert credits[0] == pytest.approx(0.5625, abs=1e-9)
    assert 1 not in credits
    assert result.word_matches.unmatched_gt == [1]
    announce(7, "partial-line credit 0.5625 for covered word, 0 for the other")


def test_criterion_8_report_determinism_across_workers(tmp_path):
    from textdeteval.cli import main

    corpus = tmp_path / "corpus"
    scenes = make_random_corpus(60, seed=13, with_confidence=True)
    dump_scenes(scenes, corpus, det_layout="quad+conf")
    reports = {}
    for workers in (1, 8):
        path = tmp_path / f"report_{workers}.json"
        code = main(
            [
                "evaluate",
                "--gt", str(corpus),
                "--det", str(corpus),
                "--det-layout", "quad+conf",
                "--metrics", "iou,siou,tiou,ic03,deteval-ic13-order,deteval-deteval-order,ap",
                "--per-image",
                "--workers", str(workers),
                "--report", str(path),
            ]
        )
        assert code == 0
        reports[workers] = path.read_bytes()
    assert reports[1] == reports[8]
    announce(8, f"byte-identical reports with 1 and 8 workers ({len(reports[1])} bytes)")
