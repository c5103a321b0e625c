"""Synthetic-scene constructions: closed forms, feasibility, determinism."""

from __future__ import annotations

import pytest

from textdeteval.annotations import serialize_detections, serialize_gt
from textdeteval.geometry import rectangle
from textdeteval.harness import (
    InfeasibleSceneError,
    PerturbSpec,
    compare_metrics,
    make_cut_detection,
    make_equal_iou_quartet,
    make_line_scene,
    make_order_pathology_scene,
    make_oversegmentation,
    make_oversegmentation_scene,
    make_random_corpus,
    make_random_scene,
    max_cut_iou,
)
from textdeteval.matching import MatchConfig, match_deteval
from textdeteval.pair_scores import iou

GT = rectangle(0, 0, 100, 20)


class TestCutDetection:
    def test_closed_form_shift(self):
        det = make_cut_detection(GT, 0.2, target_iou=2 / 3)
        assert det.polygon.bounds == (20.0, 0.0, 120.0, 20.0)
        assert iou(GT, det.polygon) == pytest.approx(2 / 3, abs=1e-12)

    def test_vanishing_cut_approaches_identity(self):
        det = make_cut_detection(GT, 1e-7)
        assert iou(GT, det.polygon) == pytest.approx(1.0, abs=1e-6)

    def test_infeasible_target_rejected(self):
        assert max_cut_iou(0.5) == pytest.approx(1 / 3)
        with pytest.raises(InfeasibleSceneError, match="unreachable"):
            make_cut_detection(GT, 0.5, target_iou=0.9)

    def test_extension_reaches_lower_target(self):
        det = make_cut_detection(GT, 0.2, target_iou=0.55)
        assert iou(GT, det.polygon) == pytest.approx(0.55, abs=1e-9)


class TestQuartet:
    @pytest.mark.parametrize("target", [0.55, 2 / 3, 0.8, 0.9])
    def test_iou_targets_hit_exactly(self, target):
        for scene in make_equal_iou_quartet(GT, target):
            target_gt = scene.gts[0].polygon
            det = scene.dets[0].polygon
            assert iou(target_gt, det) == pytest.approx(target, abs=1e-9)

    def test_labels(self):
        labels = [s.scene_id for s in make_equal_iou_quartet(GT, 2 / 3)]
        assert labels == [
            "quartet_cutting",
            "quartet_pure",
            "quartet_outlier",
            "quartet_cutting_outlier",
        ]

    def test_target_outside_range_rejected(self):
        with pytest.raises(InfeasibleSceneError):
            make_equal_iou_quartet(GT, 0.4)
        with pytest.raises(InfeasibleSceneError):
            make_equal_iou_quartet(GT, 1.0)

    def test_rotation_preserves_scores(self):
        scenes = make_equal_iou_quartet(GT, 2 / 3)
        rotated = [s.rotated(0.37, origin=(50.0, 10.0)) for s in scenes]
        for row, rot_row in zip(compare_metrics(scenes), compare_metrics(rotated)):
            for key in ("iou", "siou", "tiou", "ic03"):
                assert rot_row[key] == pytest.approx(row[key], abs=1e-9)


class TestOversegmentation:
    def test_two_slices_form_group(self):
        dets = make_oversegmentation(GT, 2)
        scene_gts = [__import__("textdeteval").GtInstance(id=0, polygon=GT)]
        ms = match_deteval(scene_gts, dets, MatchConfig())
        assert len(ms.om_groups) == 1

    def test_single_slice_rejected(self):
        with pytest.raises(InfeasibleSceneError):
            make_oversegmentation(GT, 1)

    def test_slices_tile_exactly(self):
        dets = make_oversegmentation(GT, 5)
        assert sum(d.polygon.area for d in dets) == pytest.approx(GT.area)
        for det in dets:
            assert iou(GT, det.polygon) == pytest.approx(1 / 5)


class TestPerturbSpec:
    def test_validation(self):
        with pytest.raises(ValueError):
            PerturbSpec("explode", 0.5)
        with pytest.raises(ValueError):
            PerturbSpec("oversegment", 1)
        with pytest.raises(ValueError):
            PerturbSpec("cut", 1.5)
        PerturbSpec("cut", 0.3)
        PerturbSpec("oversegment", 3)


class TestRandomScenes:
    def test_same_seed_bit_identical(self):
        a = make_random_scene(77, with_confidence=True)
        b = make_random_scene(77, with_confidence=True)
        assert serialize_gt(a.gts) == serialize_gt(b.gts)
        assert serialize_detections(a.dets, "quad+conf") == serialize_detections(
            b.dets, "quad+conf"
        )
        assert a.gts == b.gts and a.dets == b.dets

    def test_all_polygons_valid(self):
        for scene in make_random_corpus(30, seed=5):
            for g in scene.gts:
                assert not g.polygon.degenerate
            for d in scene.dets:
                assert not d.polygon.degenerate

    def test_line_scene_modes(self):
        lines_mode = make_line_scene(3, detect="lines")
        words_mode = make_line_scene(3, detect="words")
        assert lines_mode.lines and words_mode.lines
        assert len(lines_mode.dets) == len(lines_mode.lines)
        assert len(words_mode.dets) == len(words_mode.gts)


class TestCompareMetrics:
    def test_quartet_rows(self):
        rows = compare_metrics(make_equal_iou_quartet(GT, 2 / 3))
        assert len(rows) == 4
        iou_values = {row["iou"] for row in rows}
        assert len(iou_values) == 1  # identical hit-or-miss scores by construction

    def test_empty_input(self):
        assert compare_metrics([]) == []

    def test_oversegmentation_gap(self):
        row = compare_metrics([make_oversegmentation_scene()])[0]
        assert row["deteval"] > 0.7
        assert row["tiou"] == 0.0

    def test_order_pathology_scene_structure(self):
        scene = make_order_pathology_scene()
        assert len(scene.gts) == 2 and len(scene.dets) == 2


def test_apply_perturbation_kinds():
    from textdeteval.harness import apply_perturbation

    cut = apply_perturbation(GT, PerturbSpec("cut", 0.2))
    assert len(cut) == 1 and iou(GT, cut[0].polygon) == pytest.approx(2 / 3)
    dilate = apply_perturbation(GT, PerturbSpec("dilate", 0.1))
    assert dilate[0].polygon.area > GT.area
    outlier = apply_perturbation(GT, PerturbSpec("outlier", 0.3))
    assert outlier[0].polygon.bounds[2] > GT.bounds[2]
    slices = apply_perturbation(GT, PerturbSpec("oversegment", 4))
    assert len(slices) == 4
