"""Scene-text detection evaluation toolkit.

Scores polygonal detections against ground truth under the classic
protocols (hit-or-miss IoU, best-match averaging, staged coverage
matching, interpolated AP, end-to-end transcription match) and the
tightness-aware variants that replace binary hits with continuous scores
penalizing cut-off text and captured neighbors.
"""

__version__ = "0.1.0"

from .aggregate import (
    MetricSummary,
    average_precision,
    binary_scores,
    deteval_scores,
    end_to_end_scores,
    hmean,
    ic03_scores,
    siou_scores,
    tiou_scores,
)
from .annotations import (
    AnnotationFormatError,
    Detection,
    DetLayout,
    GtInstance,
    ImageRecord,
    load_dataset,
    parse_detection_file,
    parse_gt_word_file,
)
from .evaluate import EvalOptions, evaluate_dataset, evaluate_image
from .geometry import (
    InvalidPolygonError,
    Point,
    Polygon,
    intersection_area,
    outlier_area,
    polygon_area,
    rectangle,
    union_area,
)
from .joint import LineAnnotation, build_line_index, evaluate_joint
from .matching import (
    MatchConfig,
    MatchOrder,
    MatchSet,
    filter_dont_care,
    match_deteval,
    match_ic03,
    match_one_to_one,
)
from .pair_scores import PairScore, coverage_ratios, ic03_match_value, iou, score_pair, tiou_precision, tiou_recall
from .raster import Region, rasterized_area, region

__all__ = [
    "AnnotationFormatError",
    "DetLayout",
    "Detection",
    "EvalOptions",
    "GtInstance",
    "ImageRecord",
    "InvalidPolygonError",
    "LineAnnotation",
    "MatchConfig",
    "MatchOrder",
    "MatchSet",
    "MetricSummary",
    "PairScore",
    "Point",
    "Polygon",
    "Region",
    "average_precision",
    "binary_scores",
    "build_line_index",
    "coverage_ratios",
    "deteval_scores",
    "end_to_end_scores",
    "evaluate_dataset",
    "evaluate_image",
    "evaluate_joint",
    "filter_dont_care",
    "hmean",
    "ic03_match_value",
    "ic03_scores",
    "intersection_area",
    "iou",
    "load_dataset",
    "match_deteval",
    "match_ic03",
    "match_one_to_one",
    "outlier_area",
    "parse_detection_file",
    "parse_gt_word_file",
    "polygon_area",
    "rasterized_area",
    "rectangle",
    "region",
    "score_pair",
    "siou_scores",
    "tiou_precision",
    "tiou_recall",
    "tiou_scores",
    "union_area",
]
