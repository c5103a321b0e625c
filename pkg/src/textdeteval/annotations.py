"""ICDAR-style annotation parsing, serialization and dataset assembly.

Two text grammars are supported, one instance per line:

* quad:  ``x1,y1,x2,y2,x3,y3,x4,y4[,transcription]``
* rect:  ``xmin,ymin,xmax,ymax[,transcription]``

Detection files may append a confidence and/or a transcription after the
coordinates; the column layout is declared explicitly rather than guessed.
All files are UTF-8; a leading BOM is tolerated and stripped.  Coordinates
are parsed as reals even though competition files hold integers, so
synthetic data needs no quantization.
"""

from __future__ import annotations

import re
import zipfile
from dataclasses import dataclass, field
from pathlib import Path

from .geometry import InvalidPolygonError, Polygon

DONT_CARE_SENTINEL = "###"

GT_FORMATS = ("icdar15-quad", "icdar13-rect")

WORD = "word"
LINE = "line"


class AnnotationFormatError(ValueError):
    """Malformed annotation input; message carries file name and line number."""


@dataclass(frozen=True)
class GtInstance:
    """One ground-truth region of an image."""

    id: int
    polygon: Polygon
    transcription: str | None = None
    dont_care: bool = False
    granularity: str = WORD


@dataclass(frozen=True)
class Detection:
    """One predicted region, with optional confidence and transcription."""

    id: int
    polygon: Polygon
    confidence: float | None = None
    transcription: str | None = None


@dataclass
class ImageRecord:
    """Everything known about one image: ground truth, detections, lines."""

    image_id: str
    gts: list[GtInstance]
    dets: list[Detection]
    lines: list[GtInstance] = field(default_factory=list)
    # Optional explicit line membership sidecar: line id -> member word ids.
    line_members: dict[int, list[int]] | None = None


@dataclass(frozen=True)
class DetLayout:
    """Declared column layout of a detection file."""

    form: str  # "quad" | "rect"
    confidence: bool = False
    transcription: bool = False

    @classmethod
    def parse(cls, spec: str) -> "DetLayout":
        parts = spec.split("+")
        form = parts[0]
        if form not in ("quad", "rect"):
            raise ValueError(f"unknown detection layout {spec!r}")
        extras = parts[1:]
        for extra in extras:
            if extra not in ("conf", "text"):
                raise ValueError(f"unknown detection layout field {extra!r} in {spec!r}")
        return cls(form, confidence="conf" in extras, transcription="text" in extras)

    @property
    def coord_count(self) -> int:
        return 8 if self.form == "quad" else 4

    def __str__(self) -> str:
        out = self.form
        if self.confidence:
            out += "+conf"
        if self.transcription:
            out += "+text"
        return out


def _decode(data: bytes | str) -> str:
    if isinstance(data, bytes):
        return data.decode("utf-8-sig")
    return data.lstrip("\ufeff")


def _to_float(field: str, source: str, lineno: int, what: str) -> float:
    # Plain decimal notation only: no grouping separators, locale variants
    # or python-isms like underscores.
    if "_" in field:
        raise AnnotationFormatError(f"{source}:{lineno}: bad {what} {field!r}")
    try:
        return float(field)
    except ValueError:
        raise AnnotationFormatError(f"{source}:{lineno}: bad {what} {field!r}") from None


def _parse_floats(fields: list[str], n: int, source: str, lineno: int) -> list[float]:
    return [_to_float(f, source, lineno, "coordinate") for f in fields[:n]]


def _build_polygon(coords: list[float], form: str, source: str, lineno: int) -> Polygon:
    if form == "rect":
        xmin, ymin, xmax, ymax = coords
        if xmax < xmin or ymax < ymin:
            raise AnnotationFormatError(
                f"{source}:{lineno}: inverted rectangle {coords!r}"
            )
        pts = [(xmin, ymin), (xmax, ymin), (xmax, ymax), (xmin, ymax)]
    else:
        pts = list(zip(coords[0::2], coords[1::2]))
    try:
        return Polygon(pts)
    except InvalidPolygonError as exc:
        raise AnnotationFormatError(f"{source}:{lineno}: {exc}") from None


def parse_gt_word_file(
    data: bytes | str,
    fmt: str = "icdar15-quad",
    *,
    source: str = "<memory>",
    sentinel: str = DONT_CARE_SENTINEL,
    granularity: str = WORD,
) -> list[GtInstance]:
    """Parse a ground-truth file into per-image instances with dense ids."""
    if fmt not in GT_FORMATS:
        raise ValueError(f"unknown ground-truth format {fmt!r}")
    form = "quad" if fmt == "icdar15-quad" else "rect"
    n_coords = 8 if form == "quad" else 4
    out: list[GtInstance] = []
    for lineno, raw in enumerate(_decode(data).splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        fields = line.split(",", n_coords)
        if len(fields) < n_coords:
            raise AnnotationFormatError(
                f"{source}:{lineno}: expected at least {n_coords} fields, got {len(fields)}"
            )
        coords = _parse_floats(fields, n_coords, source, lineno)
        polygon = _build_polygon(coords, form, source, lineno)
        transcription = fields[n_coords].strip() if len(fields) > n_coords else None
        dont_care = transcription == sentinel
        out.append(
            GtInstance(
                id=len(out),
                polygon=polygon,
                transcription=transcription,
                dont_care=dont_care,
                granularity=granularity,
            )
        )
    return out


def parse_detection_file(
    data: bytes | str,
    layout: DetLayout | str = "quad",
    *,
    source: str = "<memory>",
) -> list[Detection]:
    """Parse a detection file according to the declared column layout."""
    if isinstance(layout, str):
        layout = DetLayout.parse(layout)
    n_coords = layout.coord_count
    out: list[Detection] = []
    for lineno, raw in enumerate(_decode(data).splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        max_fields = n_coords + (1 if layout.confidence else 0)
        if layout.transcription:
            fields = line.split(",", max_fields)
        else:
            fields = line.split(",")
            if len(fields) != max_fields:
                raise AnnotationFormatError(
                    f"{source}:{lineno}: expected {max_fields} fields for layout "
                    f"'{layout}', got {len(fields)}"
                )
        if len(fields) < max_fields:
            raise AnnotationFormatError(
                f"{source}:{lineno}: expected at least {max_fields} fields for layout "
                f"'{layout}', got {len(fields)}"
            )
        coords = _parse_floats(fields, n_coords, source, lineno)
        polygon = _build_polygon(coords, layout.form, source, lineno)
        confidence: float | None = None
        if layout.confidence:
            confidence = _to_float(fields[n_coords], source, lineno, "confidence")
            if not 0.0 <= confidence <= 1.0:
                raise AnnotationFormatError(
                    f"{source}:{lineno}: confidence {confidence} outside [0, 1]"
                )
        transcription = None
        if layout.transcription:
            idx = n_coords + (1 if layout.confidence else 0)
            transcription = fields[idx].strip() if len(fields) > idx else ""
        out.append(
            Detection(
                id=len(out),
                polygon=polygon,
                confidence=confidence,
                transcription=transcription,
            )
        )
    return out


def parse_members_file(data: bytes | str, *, source: str = "<memory>") -> dict[int, list[int]]:
    """Parse a line-membership sidecar: ``line_id:word_id,word_id,...`` rows."""
    members: dict[int, list[int]] = {}
    for lineno, raw in enumerate(_decode(data).splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        head, _, tail = line.partition(":")
        try:
            line_id = int(head)
            word_ids = [int(w) for w in tail.split(",") if w.strip()]
        except ValueError:
            raise AnnotationFormatError(
                f"{source}:{lineno}: bad membership row {line!r}"
            ) from None
        if line_id in members:
            raise AnnotationFormatError(
                f"{source}:{lineno}: duplicate line id {line_id}"
            )
        members[line_id] = word_ids
    return members


def _format_number(value: float) -> str:
    return repr(value)


def serialize_gt(gts: list[GtInstance]) -> str:
    """Canonical quad-format text for ground-truth instances."""
    rows = []
    for gt in gts:
        coords = ",".join(
            f"{_format_number(p.x)},{_format_number(p.y)}" for p in gt.polygon.vertices
        )
        if gt.transcription is not None:
            rows.append(f"{coords},{gt.transcription}")
        else:
            rows.append(coords)
    return "\n".join(rows) + ("\n" if rows else "")


def serialize_detections(dets: list[Detection], layout: DetLayout | str = "quad") -> str:
    """Canonical text for detections under the given layout."""
    if isinstance(layout, str):
        layout = DetLayout.parse(layout)
    if layout.form != "quad":
        raise ValueError("canonical serialization uses the quad form")
    rows = []
    for det in dets:
        parts = [
            f"{_format_number(p.x)},{_format_number(p.y)}" for p in det.polygon.vertices
        ]
        row = ",".join(parts)
        if layout.confidence:
            if det.confidence is None:
                raise ValueError(f"detection {det.id} lacks a confidence for layout '{layout}'")
            row += f",{_format_number(det.confidence)}"
        if layout.transcription:
            row += f",{det.transcription if det.transcription is not None else ''}"
        rows.append(row)
    return "\n".join(rows) + ("\n" if rows else "")


def _pattern_regex(pattern: str) -> re.Pattern[str]:
    if "{key}" not in pattern:
        raise ValueError(f"file pattern {pattern!r} lacks a {{key}} placeholder")
    return re.compile(re.escape(pattern).replace(re.escape("{key}"), "(?P<key>.+)") + r"\Z")


def _read_archive(path: str | Path) -> dict[str, bytes]:
    """Map file basenames to contents for a directory or zip archive."""
    path = Path(path)
    if not path.exists():
        raise AnnotationFormatError(f"archive {path} does not exist")
    out: dict[str, bytes] = {}
    if path.is_dir():
        for child in sorted(path.rglob("*")):
            if child.is_file():
                if child.name in out:
                    raise AnnotationFormatError(
                        f"duplicate file name {child.name!r} under {path}"
                    )
                out[child.name] = child.read_bytes()
    elif zipfile.is_zipfile(path):
        with zipfile.ZipFile(path) as zf:
            for info in sorted(zf.infolist(), key=lambda i: i.filename):
                if info.is_dir():
                    continue
                name = Path(info.filename).name
                if name in out:
                    raise AnnotationFormatError(
                        f"duplicate file name {name!r} in {path}"
                    )
                out[name] = zf.read(info)
    else:
        raise AnnotationFormatError(f"{path} is neither a directory nor a zip archive")
    return out


def load_dataset(
    gt_path: str | Path,
    det_path: str | Path | None,
    lines_path: str | Path | None = None,
    *,
    gt_format: str = "icdar15-quad",
    det_layout: DetLayout | str = "quad",
    gt_pattern: str = "gt_{key}.txt",
    det_pattern: str = "res_{key}.txt",
    line_pattern: str = "line_{key}.txt",
    members_pattern: str = "members_{key}.txt",
    sentinel: str = DONT_CARE_SENTINEL,
) -> tuple[list[ImageRecord], list[str]]:
    """Join ground-truth, detection and line archives into image records.

    Ground truth defines the image key set.  A missing detection file
    yields an empty detection list (and a warning); a detection file whose
    key has no ground truth is an error.  Returns records sorted by image
    key plus accumulated warnings.
    """
    warnings: list[str] = []
    gt_rx = _pattern_regex(gt_pattern)
    det_rx = _pattern_regex(det_pattern)
    line_rx = _pattern_regex(line_pattern)
    members_rx = _pattern_regex(members_pattern)

    gt_files: dict[str, tuple[str, bytes]] = {}
    for name, blob in _read_archive(gt_path).items():
        m = gt_rx.match(name)
        if not m:
            continue
        key = m.group("key")
        if key in gt_files:
            raise AnnotationFormatError(f"duplicate ground-truth key {key!r}")
        gt_files[key] = (name, blob)
    if not gt_files:
        raise AnnotationFormatError(f"no files matching {gt_pattern!r} under {gt_path}")

    det_files: dict[str, tuple[str, bytes]] = {}
    if det_path is not None:
        for name, blob in _read_archive(det_path).items():
            m = det_rx.match(name)
            if not m:
                continue
            key = m.group("key")
            if key in det_files:
                raise AnnotationFormatError(f"duplicate detection key {key!r}")
            if key not in gt_files:
                raise AnnotationFormatError(
                    f"detection file {name!r} has no ground-truth image for key {key!r}"
                )
            det_files[key] = (name, blob)

    line_files: dict[str, tuple[str, bytes]] = {}
    members_files: dict[str, tuple[str, bytes]] = {}
    if lines_path is not None:
        for name, blob in _read_archive(lines_path).items():
            m = line_rx.match(name)
            if m:
                key = m.group("key")
                if key in line_files:
                    raise AnnotationFormatError(f"duplicate line-annotation key {key!r}")
                line_files[key] = (name, blob)
                continue
            m = members_rx.match(name)
            if m:
                members_files[m.group("key")] = (name, blob)

    records: list[ImageRecord] = []
    for key in sorted(gt_files):
        gt_name, gt_blob = gt_files[key]
        gts = parse_gt_word_file(gt_blob, gt_format, source=gt_name, sentinel=sentinel)
        if key in det_files:
            det_name, det_blob = det_files[key]
            dets = parse_detection_file(det_blob, det_layout, source=det_name)
        else:
            dets = []
            if det_path is not None:
                warnings.append(f"image {key!r}: no detection file, all ground truth unrecalled")
        lines: list[GtInstance] = []
        line_members = None
        if key in line_files:
            line_name, line_blob = line_files[key]
            lines = parse_gt_word_file(
                line_blob, "icdar15-quad", source=line_name, sentinel=sentinel,
                granularity=LINE,
            )
            if key in members_files:
                members_name, members_blob = members_files[key]
                line_members = parse_members_file(members_blob, source=members_name)
        records.append(
            ImageRecord(image_id=key, gts=gts, dets=dets, lines=lines, line_members=line_members)
        )
    return records, warnings
