"""Synthetic scenes with closed-form scores, for demos and property tests.

The constructions are axis-aligned rectangles so every area has an
analytic value; rotated variants are produced by rotating a solved scene,
which leaves all areas unchanged.  Included are the classic
demonstrations: a quartet of detections sharing one IoU value yet
differing in tightness, the over-segmentation precision loophole, and a
scene where the two historical stage orders disagree.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field, replace

from .annotations import Detection, GtInstance, ImageRecord, LINE
from .geometry import Polygon, rectangle
from .pair_scores import iou as pair_iou

IOU_TARGET_TOLERANCE = 1e-9

_WORDS = (
    "ARRIVALS", "COFFEE", "EXIT", "HOTEL", "MARKET", "NORTH", "OPEN",
    "PARKING", "SALE", "STATION", "TAXI", "TICKETS",
)


class InfeasibleSceneError(ValueError):
    """Requested construction has no solution."""


@dataclass
class Scene:
    """A labeled single-image evaluation input."""

    scene_id: str
    gts: list[GtInstance]
    dets: list[Detection]
    lines: list[GtInstance] = field(default_factory=list)

    def to_record(self) -> ImageRecord:
        return ImageRecord(
            image_id=self.scene_id,
            gts=list(self.gts),
            dets=list(self.dets),
            lines=list(self.lines),
        )

    def rotated(self, angle: float, origin: tuple[float, float] = (0.0, 0.0)) -> "Scene":
        """Rigidly rotated copy; all areas and scores are preserved."""
        return Scene(
            scene_id=self.scene_id,
            gts=[replace(g, polygon=g.polygon.rotated(angle, origin)) for g in self.gts],
            dets=[replace(d, polygon=d.polygon.rotated(angle, origin)) for d in self.dets],
            lines=[replace(l, polygon=l.polygon.rotated(angle, origin)) for l in self.lines],
        )


@dataclass(frozen=True)
class PerturbSpec:
    """How to derive a detection from a ground-truth box."""

    kind: str  # "cut" | "dilate" | "outlier" | "oversegment"
    magnitude: float | int
    seed: int = 0

    def __post_init__(self) -> None:
        if self.kind not in ("cut", "dilate", "outlier", "oversegment"):
            raise ValueError(f"unknown perturbation kind {self.kind!r}")
        if self.kind == "oversegment":
            if int(self.magnitude) < 2:
                raise ValueError("oversegment needs a count of at least 2")
        elif not 0.0 < float(self.magnitude) < 1.0:
            raise ValueError(f"{self.kind} magnitude must be in (0, 1)")


def _require_rect(gt: Polygon) -> tuple[float, float, float, float]:
    x0, y0, x1, y1 = gt.bounds
    if len(gt.vertices) != 4 or abs(gt.area - (x1 - x0) * (y1 - y0)) > 1e-9 * max(gt.area, 1.0):
        raise InfeasibleSceneError(
            "closed-form constructions need an axis-aligned rectangle; "
            "rotate the finished scene instead"
        )
    return x0, y0, x1, y1


def max_cut_iou(cut_fraction: float) -> float:
    """Largest IoU reachable by a detection missing ``cut_fraction`` of the box."""
    return (1.0 - cut_fraction) / (1.0 + cut_fraction)


def make_cut_detection(
    gt: Polygon, cut_fraction: float, target_iou: float | None = None
) -> Detection:
    """Detection that misses the leftmost ``cut_fraction`` of the box.

    The box is shifted right by the cut width, then extended right when a
    lower ``target_iou`` is requested.  With no target the extension is
    zero, which realizes the maximum achievable IoU of
    ``(1 - cut) / (1 + cut)``.
    """
    if not 0.0 < cut_fraction < 1.0:
        raise InfeasibleSceneError(f"cut fraction {cut_fraction} outside (0, 1)")
    x0, y0, x1, y1 = _require_rect(gt)
    w = x1 - x0
    reachable = max_cut_iou(cut_fraction)
    if target_iou is None:
        extension = 0.0
    else:
        if target_iou > reachable + 1e-12 or target_iou <= 0.0:
            raise InfeasibleSceneError(
                f"IoU {target_iou} unreachable with cut {cut_fraction}; "
                f"maximum is {reachable:.6f}"
            )
        extension = max(w * ((1.0 - cut_fraction) / target_iou - (1.0 + cut_fraction)), 0.0)
        if extension < 1e-9 * w:  # float dust when the target equals the maximum
            extension = 0.0
    shift = cut_fraction * w
    return Detection(
        id=0,
        polygon=rectangle(x0 + shift, y0, x1 + shift + extension, y1),
    )


def make_equal_iou_quartet(gt: Polygon, iou_target: float) -> list[Scene]:
    """Four scenes whose matched pair shares one IoU but not one tightness.

    Labels: ``cutting`` (detection misses part of the text), ``pure``
    (detection is a loose superset), ``outlier`` (loose superset that also
    clips a neighboring ground truth) and ``cutting_outlier`` (both).  A
    second ground-truth box appears in every scene, placed far away in the
    first two, so all four share identical hit-or-miss scores and differ
    only through the tightness penalties.
    """
    if not 0.5 < iou_target < 1.0:
        raise InfeasibleSceneError(f"IoU target {iou_target} outside (0.5, 1)")
    x0, y0, x1, y1 = _require_rect(gt)
    w = x1 - x0
    cut_fraction = (1.0 - iou_target) / (1.0 + iou_target)
    pad = w * (1.0 / iou_target - 1.0) / 2.0

    det_cut = make_cut_detection(gt, cut_fraction, iou_target).polygon
    det_pure = rectangle(x0 - pad, y0, x1 + pad, y1)
    # Neighbor starts halfway into the pure detection's overhang, so both
    # detection variants clip it; the far copy touches nothing.
    neighbor = rectangle(x1 + pad / 2.0, y0, x1 + pad / 2.0 + w, y1)
    far = rectangle(x1 + 3.0 * w + 2.0 * pad, y0, x1 + 4.0 * w + 2.0 * pad, y1)

    def scene(label: str, det: Polygon, second_gt: Polygon) -> Scene:
        achieved = pair_iou(gt, det)
        if abs(achieved - iou_target) > IOU_TARGET_TOLERANCE:
            raise InfeasibleSceneError(
                f"{label}: constructed IoU {achieved!r} misses target {iou_target!r}"
            )
        return Scene(
            scene_id=f"quartet_{label}",
            gts=[
                GtInstance(id=0, polygon=gt, transcription="TARGET"),
                GtInstance(id=1, polygon=second_gt, transcription="NEIGHBOR"),
            ],
            dets=[Detection(id=0, polygon=det)],
        )

    return [
        scene("cutting", det_cut, far),
        scene("pure", det_pure, far),
        scene("outlier", det_pure, neighbor),
        scene("cutting_outlier", det_cut, neighbor),
    ]


def make_oversegmentation(gt: Polygon, k: int) -> list[Detection]:
    """``k`` abutting vertical slices exactly tiling the box.

    Each slice lies wholly inside the ground truth, and together the
    slices cover it, so the one-to-many stage accepts the group while each
    slice alone has IoU 1/k.
    """
    if k < 2:
        raise InfeasibleSceneError(f"need at least 2 slices, got {k}")
    x0, y0, x1, y1 = _require_rect(gt)
    w = x1 - x0
    out = []
    for i in range(k):
        out.append(
            Detection(
                id=i,
                polygon=rectangle(x0 + w * i / k, y0, x0 + w * (i + 1) / k, y1),
            )
        )
    return out


def make_oversegmentation_scene(k: int = 20, extra_false_positives: int = 3) -> Scene:
    """The over-segmentation precision loophole.

    One ground truth sliced into ``k`` accepted fragments plus a few plain
    false positives: staged matching pays 0.8 per fragment, lifting
    precision to ``0.8 * k / (k + fps)`` even though every fragment is
    useless on its own (IoU 1/k).
    """
    gt_poly = rectangle(0.0, 0.0, 400.0, 40.0)
    dets = make_oversegmentation(gt_poly, k)
    for i in range(extra_false_positives):
        dets.append(
            Detection(
                id=len(dets),
                polygon=rectangle(20.0 + i * 140.0, 200.0, 120.0 + i * 140.0, 240.0),
            )
        )
    return Scene(
        scene_id="oversegmentation",
        gts=[GtInstance(id=0, polygon=gt_poly, transcription="SLICED")],
        dets=dets,
    )


def make_order_pathology_scene() -> Scene:
    """Scene where the two stage orders produce different matchings.

    A tight detection sits on the first word; a long detection spans both
    words.  Running one-to-one first consumes the first word, after which
    the long detection has a single candidate left and many-to-one cannot
    form: the long detection becomes a false positive and the second word
    goes unrecalled.  Running many-to-one first groups both words under
    the long detection instead.
    """
    g1 = rectangle(0.0, 0.0, 150.0, 40.0)
    g2 = rectangle(250.0, 0.0, 400.0, 40.0)
    return Scene(
        scene_id="order_pathology",
        gts=[
            GtInstance(id=0, polygon=g1, transcription="LEFT"),
            GtInstance(id=1, polygon=g2, transcription="RIGHT"),
        ],
        dets=[
            Detection(id=0, polygon=g1),
            Detection(id=1, polygon=rectangle(0.0, 0.0, 400.0, 40.0)),
        ],
    )


def make_line_scene(
    seed: int, n_lines: int = 3, detect: str = "lines", scene_id: str | None = None
) -> Scene:
    """Rows of words with text-line annotations and line- or word-level detections.

    ``detect="lines"`` emits one detection per full line (a word-level
    protocol calls these false positives); ``detect="words"`` emits tight
    word detections and leaves the line annotations unmatched.
    """
    if detect not in ("lines", "words"):
        raise ValueError(f"unknown detect mode {detect!r}")
    rng = random.Random(seed)
    gts: list[GtInstance] = []
    lines: list[GtInstance] = []
    dets: list[Detection] = []
    for row in range(n_lines):
        y0 = row * 90.0 + rng.uniform(0.0, 10.0)
        y1 = y0 + rng.uniform(30.0, 45.0)
        n_words = rng.randint(2, 4)
        x = rng.uniform(0.0, 30.0)
        # One width per line keeps every word's IoU against the whole line
        # under one half, so word-level boxes never match line regions.
        w = rng.uniform(60.0, 120.0)
        word_boxes = []
        for _ in range(n_words):
            word_boxes.append(rectangle(x, y0, x + w, y1))
            x += w + rng.uniform(12.0, 30.0)
        for box in word_boxes:
            gts.append(
                GtInstance(id=len(gts), polygon=box, transcription=rng.choice(_WORDS))
            )
        line_box = rectangle(word_boxes[0].bounds[0], y0, word_boxes[-1].bounds[2], y1)
        lines.append(
            GtInstance(id=len(lines), polygon=line_box, granularity=LINE)
        )
        if detect == "lines":
            dets.append(Detection(id=len(dets), polygon=line_box))
        else:
            for box in word_boxes:
                dets.append(Detection(id=len(dets), polygon=box))
    return Scene(
        scene_id=scene_id or f"line_scene_{seed}_{detect}",
        gts=gts,
        dets=dets,
        lines=lines,
    )


def _perturbed_detection(rng: random.Random, box: Polygon) -> list[Polygon]:
    x0, y0, x1, y1 = box.bounds
    w, h = x1 - x0, y1 - y0
    roll = rng.random()
    if roll < 0.30:
        return [box]
    if roll < 0.50:
        fx = rng.uniform(0.03, 0.14) * w
        fy = rng.uniform(0.03, 0.14) * h
        return [rectangle(x0 - fx, y0 - fy, x1 + fx, y1 + fy)]
    if roll < 0.70:
        shift = rng.uniform(0.05, 0.35) * w
        return [rectangle(x0 + shift, y0, x1 + shift, y1)]
    if roll < 0.80:
        k = rng.choice((2, 3))
        return [
            rectangle(x0 + w * i / k, y0, x0 + w * (i + 1) / k, y1) for i in range(k)
        ]
    return []  # missed


def make_random_scene(
    seed: int, scene_id: str | None = None, with_confidence: bool | None = None
) -> Scene:
    """Seeded random words-plus-detections image.

    Words sit on a loose grid so they never overlap; detections are
    derived per word (kept, dilated, shifted, over-segmented or dropped),
    with occasional spurious boxes and an all-or-nothing confidence
    column (forceable via ``with_confidence`` so a dumped corpus can use a
    uniform file layout).  A quarter of the scenes are rigidly rotated to
    exercise the non-axis-aligned path.  The same seed always yields the
    same scene.
    """
    rng = random.Random(seed)
    cols, rows = 4, rng.randint(1, 3)
    cell_w, cell_h = 170.0, 80.0
    word_boxes: list[Polygon] = []
    for r in range(rows):
        for c in range(cols):
            if rng.random() < 0.72:
                x0 = c * cell_w + rng.uniform(5.0, 25.0)
                y0 = r * cell_h + rng.uniform(5.0, 18.0)
                w = rng.uniform(60.0, 130.0)
                h = rng.uniform(28.0, 48.0)
                word_boxes.append(rectangle(x0, y0, x0 + w, y0 + h))

    gts = [
        GtInstance(
            id=i,
            polygon=box,
            transcription="###" if rng.random() < 0.08 else rng.choice(_WORDS),
            dont_care=False,
        )
        for i, box in enumerate(word_boxes)
    ]
    gts = [
        replace(g, dont_care=(g.transcription == "###")) for g in gts
    ]

    det_polys: list[Polygon] = []
    for box in word_boxes:
        det_polys.extend(_perturbed_detection(rng, box))
    for i in range(rng.randint(0, 2)):
        x0 = i * 180.0 + rng.uniform(0.0, 40.0)
        y0 = rows * cell_h + 30.0 + rng.uniform(0.0, 20.0)
        det_polys.append(rectangle(x0, y0, x0 + rng.uniform(50.0, 120.0), y0 + rng.uniform(20.0, 40.0)))

    if with_confidence is None:
        with_confidence = rng.random() < 0.5
    dets = [
        Detection(
            id=i,
            polygon=poly,
            confidence=round(rng.uniform(0.3, 1.0), 6) if with_confidence else None,
            transcription=rng.choice(_WORDS) if rng.random() < 0.5 else None,
        )
        for i, poly in enumerate(det_polys)
    ]

    scene = Scene(scene_id=scene_id or f"synthetic_{seed:06d}", gts=gts, dets=dets)
    if rng.random() < 0.25:
        angle = rng.uniform(-0.3, 0.3)
        scene = scene.rotated(angle, origin=(cols * cell_w / 2.0, rows * cell_h / 2.0))
    return scene


def make_random_corpus(
    count: int, seed: int = 0, with_confidence: bool | None = None
) -> list[Scene]:
    """``count`` independent random scenes with ids derived from ``seed``."""
    base = random.Random(seed).randrange(1 << 30)
    return [
        make_random_scene(base + i, scene_id=f"img_{i:05d}", with_confidence=with_confidence)
        for i in range(count)
    ]


def compare_metrics(scenes: list[Scene], cfg=None) -> list[dict]:
    """Per-scene Hmean table across the implemented protocols."""
    from .evaluate import EvalOptions, evaluate_image
    from .matching import MatchConfig

    cfg = cfg or MatchConfig()
    opts = EvalOptions(
        metrics=("iou", "siou", "tiou", "deteval-ic13-order", "ic03"),
        match=cfg,
    )
    rows = []
    for scene in scenes:
        result = evaluate_image(scene.to_record(), opts)
        rows.append(
            {
                "scene": scene.scene_id,
                "iou": result.summaries["iou"].hmean,
                "siou": result.summaries["siou"].hmean,
                "tiou": result.summaries["tiou"].hmean,
                "deteval": result.summaries["deteval-ic13-order"].hmean,
                "ic03": result.summaries["ic03"].hmean,
            }
        )
    return rows


def apply_perturbation(gt: Polygon, spec: PerturbSpec) -> list[Detection]:
    """Materialize one perturbation spec against a ground-truth box."""
    if spec.kind == "cut":
        return [make_cut_detection(gt, float(spec.magnitude))]
    if spec.kind == "dilate":
        x0, y0, x1, y1 = _require_rect(gt)
        fx = float(spec.magnitude) * (x1 - x0) / 2.0
        fy = float(spec.magnitude) * (y1 - y0) / 2.0
        return [Detection(id=0, polygon=rectangle(x0 - fx, y0 - fy, x1 + fx, y1 + fy))]
    if spec.kind == "outlier":
        x0, y0, x1, y1 = _require_rect(gt)
        w = x1 - x0
        pad = float(spec.magnitude) * w
        return [Detection(id=0, polygon=rectangle(x0, y0, x1 + pad, y1))]
    return make_oversegmentation(gt, int(spec.magnitude))


def dump_scenes(scenes: list[Scene], directory, det_layout: str = "quad") -> None:
    """Write scenes as ground-truth/detection/line files in canonical text form."""
    from pathlib import Path

    from .annotations import serialize_detections, serialize_gt

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for scene in scenes:
        (directory / f"gt_{scene.scene_id}.txt").write_text(
            serialize_gt(scene.gts), encoding="utf-8"
        )
        (directory / f"res_{scene.scene_id}.txt").write_text(
            serialize_detections(scene.dets, det_layout), encoding="utf-8"
        )
        if scene.lines:
            (directory / f"line_{scene.scene_id}.txt").write_text(
                serialize_gt(scene.lines), encoding="utf-8"
            )
