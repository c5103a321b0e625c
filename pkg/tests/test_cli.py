"""Command-line behavior, end to end through ``main``."""

from __future__ import annotations

import json

import pytest

from textdeteval.cli import main
from textdeteval.geometry import rectangle
from textdeteval.harness import dump_scenes, make_equal_iou_quartet, make_line_scene


def run(args):
    return main(args)


def _dump_quartet(directory):
    scenes = make_equal_iou_quartet(rectangle(0, 0, 100, 20), 2 / 3)
    dump_scenes(scenes, directory)
    return scenes


def test_evaluate_quartet(tmp_path):
    data = tmp_path / "scenes"
    _dump_quartet(data)
    report_path = tmp_path / "report.json"
    code = run(
        [
            "evaluate",
            "--gt", str(data),
            "--det", str(data),
            "--metrics", "iou,tiou",
            "--per-image",
            "--report", str(report_path),
        ]
    )
    assert code == 0
    report = json.loads(report_path.read_text())
    per_image = report["per_image"]
    iou_hmeans = {k: v["metrics"]["iou"]["hmean"] for k, v in per_image.items()}
    tiou_hmeans = {k: v["metrics"]["tiou"]["hmean"] for k, v in per_image.items()}
    assert len(set(iou_hmeans.values())) == 1
    assert tiou_hmeans["quartet_pure"] > tiou_hmeans["quartet_cutting"]
    assert tiou_hmeans["quartet_pure"] > tiou_hmeans["quartet_outlier"]
    assert tiou_hmeans["quartet_cutting_outlier"] == min(tiou_hmeans.values())


def test_evaluate_joint_two_word_line(tmp_path):
    data = tmp_path / "scenes"
    scene = make_line_scene(0, n_lines=1, detect="lines", scene_id="img_0")
    dump_scenes([scene], data)
    report_path = tmp_path / "report.json"
    code = run(
        [
            "evaluate",
            "--gt", str(data),
            "--det", str(data),
            "--lines", str(data),
            "--joint",
            "--metrics", "iou,tiou",
            "--per-image",
            "--report", str(report_path),
        ]
    )
    assert code == 0
    report = json.loads(report_path.read_text())
    image = report["per_image"]["img_0"]
    credits = image["joint"]["word_credits"]
    assert len(credits) == len(scene.gts)
    for credit in credits:
        assert credit["value"] == pytest.approx(1.0)
    assert image["metrics"]["tiou"]["recall_sum"] == pytest.approx(float(len(scene.gts)))
    assert report["metrics"]["tiou"]["recall"] == pytest.approx(1.0)


def test_evaluate_empty_detection_archive(tmp_path, caplog):
    data = tmp_path / "scenes"
    _dump_quartet(data)
    empty = tmp_path / "empty"
    empty.mkdir()
    report_path = tmp_path / "report.json"
    code = run(
        [
            "evaluate",
            "--gt", str(data),
            "--det", str(empty),
            "--metrics", "iou",
            "--report", str(report_path),
        ]
    )
    assert code == 0
    report = json.loads(report_path.read_text())
    assert report["metrics"]["iou"]["recall"] == 0.0
    assert report["metrics"]["iou"]["precision"] == 0.0
    assert report["warnings"]


def test_strict_formats_turns_warning_into_error(tmp_path):
    data = tmp_path / "scenes"
    _dump_quartet(data)
    empty = tmp_path / "empty"
    empty.mkdir()
    code = run(
        ["evaluate", "--gt", str(data), "--det", str(empty), "--strict-formats"]
    )
    assert code == 1


def test_unknown_metric_is_usage_error(tmp_path):
    data = tmp_path / "scenes"
    _dump_quartet(data)
    assert run(["evaluate", "--gt", str(data), "--det", str(data), "--metrics", "blah"]) == 2


def test_joint_requires_lines(tmp_path):
    data = tmp_path / "scenes"
    _dump_quartet(data)
    assert run(["evaluate", "--gt", str(data), "--det", str(data), "--joint"]) == 2


def test_unknown_format_is_usage_error(tmp_path):
    data = tmp_path / "scenes"
    _dump_quartet(data)
    code = run(
        ["evaluate", "--gt", str(data), "--det", str(data), "--format", "yaml"]
    )
    assert code == 2


def test_orphan_detection_file_is_input_error(tmp_path):
    data = tmp_path / "scenes"
    _dump_quartet(data)
    (data / "res_img_unknown.txt").write_text("0,0,10,0,10,10,0,10\n")
    assert run(["evaluate", "--gt", str(data), "--det", str(data)]) == 1


def test_synth_then_evaluate_round_trip(tmp_path):
    corpus = tmp_path / "corpus"
    assert run(["synth", "--out", str(corpus), "--count", "6", "--seed", "3"]) == 0
    report_path = tmp_path / "report.json"
    code = run(
        [
            "evaluate",
            "--gt", str(corpus),
            "--det", str(corpus),
            "--metrics", "iou,siou,tiou,ic03,deteval-ic13-order",
            "--report", str(report_path),
        ]
    )
    assert code == 0
    report = json.loads(report_path.read_text())
    assert set(report["metrics"]) == {"iou", "siou", "tiou", "ic03", "deteval-ic13-order"}


def test_demo_prints_table(tmp_path, capsys):
    assert run(["demo"]) == 0
    out = capsys.readouterr().out
    assert "quartet_pure" in out
    assert "oversegmentation" in out
    assert "order_pathology" in out


def test_demo_dump_feeds_evaluate(tmp_path):
    dump_dir = tmp_path / "demo"
    assert run(["demo", "--dump", str(dump_dir), "--report", str(tmp_path / "t.txt")]) == 0
    report_path = tmp_path / "report.json"
    code = run(
        [
            "evaluate",
            "--gt", str(dump_dir),
            "--det", str(dump_dir),
            "--metrics", "iou,tiou",
            "--report", str(report_path),
        ]
    )
    assert code == 0


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        run(["--version"])
    assert exc.value.code == 0
    assert "textdeteval" in capsys.readouterr().out


def test_missing_archive_is_input_error(tmp_path):
    data = tmp_path / "scenes"
    _dump_quartet(data)
    assert run(["evaluate", "--gt", str(data), "--det", str(tmp_path / "missing")]) == 1
