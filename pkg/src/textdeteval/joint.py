"""Joint word and text-line evaluation.

Annotation granularity is inconsistent on real benchmarks: some ground
truth boxes hold single words, others whole lines, and a detector that
finds a clean text line gets punished as a false positive by a word-level
protocol.  This pass fixes that by scoring detections against auxiliary
text-line annotations first.  A detection matching a line earns precision
once; each member word it covers sufficiently earns a recall credit scaled
by how completely the detection covers the line, and is then retired so
the ordinary word-level stage cannot double count it.

Stages, in order:

1. match unconsumed detections to lines by IoU, credit covered member
   words, retire both;
2. re-run don't-care filtering against the newly retired words, so tight
   word detections inside an already-credited line stop counting as noise;
3. ordinary greedy one-to-one word matching on whatever remains.

Recall denominators always count the original non-don't-care words, and
precision denominators the detections still considered meaningful after
both filtering rounds.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .aggregate import MetricSummary, tiou_scores
from .annotations import Detection, GtInstance
from .geometry import Polygon, bounds_overlap, intersection_area
from .matching import MatchConfig, MatchSet, filter_dont_care, match_one_to_one
from .pair_scores import iou as pair_iou
from .pair_scores import tiou_precision

# Member-word coverage needed for a line match to recall the word.  The
# word-stage branch is taken when coverage is strictly below one half, so
# the recalled branch is inclusive.
WORD_COVERAGE_THRESHOLD = 0.5


class LineIndexError(ValueError):
    """Raised when line annotations overlap enough to share a member word."""


@dataclass(frozen=True)
class LineAnnotation:
    """A text-line region with the ids of the words it contains."""

    id: int
    polygon: Polygon
    member_word_ids: tuple[int, ...]


@dataclass(frozen=True)
class LineMatch:
    """A detection consumed by the line stage."""

    line_id: int
    det_id: int
    iou: float
    tiou_precision: float


@dataclass(frozen=True)
class WordCredit:
    """Recall credit a member word earned through a line match."""

    word_id: int
    line_id: int
    det_id: int
    value: float


@dataclass
class JointResult:
    """Joint-pass outcome plus the sums the aggregation layer needs."""

    word_matches: MatchSet
    line_matches: list[LineMatch]
    word_credits: list[WordCredit]
    num_gt: int
    num_det: int
    demoted_words: list[int]
    extra_dont_care_det: list[int]
    warnings: list[str] = field(default_factory=list)

    def iou_summary(self) -> MetricSummary:
        recall = float(len(self.word_credits) + len(self.word_matches.pairs))
        precision = float(len(self.line_matches) + len(self.word_matches.pairs))
        return MetricSummary("iou", recall, precision, self.num_gt, self.num_det)

    def tiou_summary(self) -> MetricSummary:
        return tiou_scores(
            self.word_matches,
            extra_recall=sum(c.value for c in self.word_credits),
            extra_precision=sum(m.tiou_precision for m in self.line_matches),
            num_gt=self.num_gt,
            num_det=self.num_det,
        )


def build_line_index(
    words: Sequence[GtInstance], lines: Sequence[GtInstance]
) -> tuple[list[LineAnnotation], list[str]]:
    """Assign words to lines by overlap ratio.

    A word belongs to a line when more than half its area lies inside the
    line polygon.  Don't-care words are never members.  Lines that end up
    with fewer than two members are dropped with a warning; a word
    claiming membership in two lines means the line polygons overlap, and
    that is a hard error because the retirement bookkeeping would break.
    """
    warnings: list[str] = []
    assignments: dict[int, list[int]] = {line.id: [] for line in lines}
    owner: dict[int, int] = {}
    for word in words:
        if word.dont_care or word.polygon.area <= 0.0:
            continue
        for line in lines:
            if not bounds_overlap(word.polygon, line.polygon):
                continue
            ratio = intersection_area(line.polygon, word.polygon) / word.polygon.area
            if ratio > 0.5:
                if word.id in owner:
                    raise LineIndexError(
                        f"word {word.id} belongs to overlapping lines "
                        f"{owner[word.id]} and {line.id}"
                    )
                owner[word.id] = line.id
                assignments[line.id].append(word.id)
    out: list[LineAnnotation] = []
    for line in lines:
        members = assignments[line.id]
        if len(members) < 2:
            warnings.append(
                f"line {line.id} dropped: only {len(members)} member word(s)"
            )
            continue
        out.append(LineAnnotation(line.id, line.polygon, tuple(members)))
    return out, warnings


def evaluate_joint(
    words: Sequence[GtInstance],
    line_index: Sequence[LineAnnotation],
    dets: Sequence[Detection],
    cfg: MatchConfig,
    dont_care_det: Sequence[int] = (),
) -> JointResult:
    """Run the three-stage joint pass.

    ``words`` holds every word instance (don't-care included, for the
    denominators and the outlier pools); ``dont_care_det`` carries the ids
    already filtered against the annotated don't-care regions.
    """
    words_by_id = {w.id: w for w in words}
    live_words = [w for w in words if not w.dont_care]
    num_gt = len(live_words)

    dc_det: set[int] = set(dont_care_det)
    consumed_det: set[int] = set()
    demoted: set[int] = set()
    line_matches: list[LineMatch] = []
    word_credits: list[WordCredit] = []

    # Stage 1: line-level pass.  A detection is consumed by its best line
    # above the IoU threshold; the line itself can serve several
    # detections, but retired words are never credited twice.
    for det in dets:
        if det.id in dc_det or det.id in consumed_det:
            continue
        best: tuple[float, int, LineAnnotation] | None = None
        for line in line_index:
            if not bounds_overlap(det.polygon, line.polygon):
                continue
            iou_val = pair_iou(line.polygon, det.polygon)
            if not cfg.exceeds(iou_val, cfg.iou_threshold):
                continue
            if best is None or (-iou_val, line.id) < (best[0], best[1]):
                best = (-iou_val, line.id, line)
        if best is None:
            continue
        line = best[2]
        line_iou = -best[0]
        member_ids = set(line.member_word_ids)
        outliers = [
            w.polygon for w in live_words if w.id not in member_ids
        ]
        line_matches.append(
            LineMatch(
                line.id,
                det.id,
                line_iou,
                tiou_precision(line.polygon, det.polygon, outliers),
            )
        )
        consumed_det.add(det.id)

        line_area = line.polygon.area
        covered = intersection_area(line.polygon, det.polygon)
        credit = (covered * (covered / line_area)) / line_area if line_area > 0.0 else 0.0
        for word_id in line.member_word_ids:
            if word_id in demoted:
                continue
            word = words_by_id[word_id]
            if word.polygon.area <= 0.0:
                continue
            coverage = intersection_area(word.polygon, det.polygon) / word.polygon.area
            if coverage >= WORD_COVERAGE_THRESHOLD:
                word_credits.append(WordCredit(word_id, line.id, det.id, credit))
                demoted.add(word_id)

    # Stage 2: retired words behave like fresh don't-care regions for the
    # detections still in play.
    demoted_instances = [words_by_id[w] for w in sorted(demoted)]
    remaining_dets = [d for d in dets if d.id not in dc_det and d.id not in consumed_det]
    extra_dc = filter_dont_care(remaining_dets, demoted_instances, cfg.dont_care_overlap)
    dc_det.update(extra_dc)

    # Stage 3: plain word-level pass over what survived.  The outlier pool
    # keeps every real word, retired or not: captured text interferes with
    # recognition regardless of the bookkeeping that retired it.
    stage_words = [w for w in live_words if w.id not in demoted]
    stage_dets = [d for d in dets if d.id not in dc_det and d.id not in consumed_det]
    word_matches = match_one_to_one(stage_words, stage_dets, cfg, outlier_pool=live_words)
    word_matches.dont_care_det = sorted(dc_det)

    num_det = sum(1 for d in dets if d.id not in dc_det)
    return JointResult(
        word_matches=word_matches,
        line_matches=line_matches,
        word_credits=word_credits,
        num_gt=num_gt,
        num_det=num_det,
        demoted_words=sorted(demoted),
        extra_dont_care_det=sorted(extra_dc),
    )
