"""File codecs and dataset utilities.

Formats (all except annotations carry a ``format`` version field):

* annotations — object-detection style JSON: ``images`` (id, width, height),
  ``categories`` (id, name; exactly the seven layout categories) and
  ``annotations`` (image_id, category_id, ``bbox`` as [x, y, width, height]).
  Corners are converted to the half-open convention internally.
* class maps — 8-bit single-channel PNG whose palette indices are the class
  codes 0-7.
* probability maps — "LPM1" binary: magic, then width/height/num_classes as
  little-endian uint32, then row-major per-pixel per-class float32.
* layouts, atlases, page texts, metric reports — versioned JSON.
* ground-truth text — plain UTF-8, one file per page.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass

import numpy as np
from PIL import Image

from .model import (
    AtlasRegion,
    BBox,
    CATEGORY_NAMES,
    ClassMap,
    LayoutClass,
    MockAtlas,
    OrderedLayout,
    PageAnnotation,
    ProbMap,
    Segment,
    SuperBox,
    validate_classmap,
    validate_probmap,
)
from .engine import PageText
from .ocreval import CorpusOcrReport, OcrReport, SegmentMatch
from .segmetrics import ClassMetrics, SegMetricsReport

LPM_MAGIC = b"LPM1"

#: Fixed per-class overlay/palette colors, stable for visual diffing.
CLASS_COLORS: dict[LayoutClass, tuple[int, int, int]] = {
    LayoutClass.background: (255, 255, 255),
    LayoutClass.header: (128, 0, 128),
    LayoutClass.article_title: (220, 20, 60),
    LayoutClass.article_body: (30, 90, 200),
    LayoutClass.advertisement: (255, 140, 0),
    LayoutClass.image: (34, 139, 34),
    LayoutClass.table: (0, 170, 170),
    LayoutClass.other: (120, 120, 120),
}


class DataFormatError(ValueError):
    """A file failed to parse or violates its schema."""


def load_json(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"{path}: malformed JSON at line {exc.lineno} column {exc.colno}") from exc


def _dump_json(payload: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1, sort_keys=False)
        fh.write("\n")


def _expect_format(payload: dict, expected: str, path) -> None:
    found = payload.get("format")
    if found != expected:
        raise DataFormatError(f"{path}: expected format {expected!r}, found {found!r}")


# --------------------------------------------------------------------------
# annotations


@dataclass(frozen=True)
class AnnotationFile:
    """All page annotations of a dataset plus its category table."""

    pages: tuple[PageAnnotation, ...]
    categories: dict[str, int]  # category name -> class code

    def __post_init__(self):
        object.__setattr__(self, "pages", tuple(self.pages))

    def page(self, page_id: str) -> PageAnnotation:
        for p in self.pages:
            if p.page_id == page_id:
                return p
        raise KeyError(page_id)


def load_annotations(path) -> AnnotationFile:
    """Parse and invariant-check an annotation file."""
    payload = load_json(path)
    for key in ("images", "categories", "annotations"):
        if key not in payload:
            raise DataFormatError(f"{path}: missing top-level key {key!r}")

    id_to_name: dict = {}
    for cat in payload["categories"]:
        name = str(cat.get("name", "")).strip().lower()
        if name not in CATEGORY_NAMES:
            raise DataFormatError(f"{path}: unknown category {cat.get('name')!r}")
        if cat["id"] in id_to_name:
            raise DataFormatError(f"{path}: duplicate category id {cat['id']}")
        id_to_name[cat["id"]] = name
    if set(id_to_name.values()) != set(CATEGORY_NAMES):
        missing = sorted(set(CATEGORY_NAMES) - set(id_to_name.values()))
        raise DataFormatError(f"{path}: category table incomplete, missing {missing}")

    by_image: dict = {}
    for i, ann in enumerate(payload["annotations"]):
        if ann.get("category_id") not in id_to_name:
            raise DataFormatError(f"{path}: annotation {i} references unknown category id "
                                  f"{ann.get('category_id')!r}")
        x, y, w, h = ann["bbox"]
        cls = LayoutClass.from_category_name(id_to_name[ann["category_id"]])
        try:
            bbox = BBox(int(round(x)), int(round(y)), int(round(x + w)), int(round(y + h)))
            segment = Segment(bbox, cls, float(ann.get("score", 1.0)))
        except (ValueError, TypeError) as exc:
            raise DataFormatError(f"{path}: annotation {i}: {exc}") from exc
        by_image.setdefault(ann["image_id"], []).append(segment)

    pages = []
    for img in payload["images"]:
        page_id = str(img["id"])
        try:
            pages.append(PageAnnotation(
                page_id=page_id,
                page_width=int(img["width"]),
                page_height=int(img["height"]),
                segments=tuple(by_image.pop(img["id"], [])),
            ))
        except ValueError as exc:
            raise DataFormatError(f"{path}: page {page_id!r}: {exc}") from exc
    if by_image:
        raise DataFormatError(f"{path}: annotations reference unknown images {sorted(by_image)}")

    return AnnotationFile(tuple(pages), {name: int(LayoutClass.from_category_name(name))
                                         for name in CATEGORY_NAMES})


def save_annotations(ann: AnnotationFile, path) -> None:
    images = [{"id": p.page_id, "width": p.page_width, "height": p.page_height}
              for p in ann.pages]
    categories = [{"id": code, "name": name} for name, code in sorted(ann.categories.items(),
                                                                      key=lambda kv: kv[1])]
    annotations = []
    for p in ann.pages:
        for s in p.segments:
            b = s.bbox
            annotations.append({
                "image_id": p.page_id,
                "category_id": int(s.cls),
                "bbox": [b.x_min, b.y_min, b.width, b.height],
                "score": s.score,
            })
    _dump_json({"images": images, "categories": categories, "annotations": annotations}, path)


def rasterize_annotations(page: PageAnnotation, dims: tuple[int, int] | None = None) -> ClassMap:
    """Paint segments onto a background-0 class map, later boxes on top.

    ``dims`` (width, height) resamples the full-resolution map by nearest
    neighbour, e.g. to the processing resolution models were trained at.
    """
    full = np.zeros((page.page_height, page.page_width), dtype=np.uint8)
    for seg in page.segments:
        b = seg.bbox
        full[b.y_min:b.y_max, b.x_min:b.x_max] = int(seg.cls)
    if dims is None or dims == (page.page_width, page.page_height):
        return full
    tw, th = dims
    if tw <= 0 or th <= 0:
        raise ValueError("target dimensions must be positive")
    ys = np.minimum((np.arange(th) + 0.5) * page.page_height / th, page.page_height - 1).astype(int)
    xs = np.minimum((np.arange(tw) + 0.5) * page.page_width / tw, page.page_width - 1).astype(int)
    return full[np.ix_(ys, xs)]


# --------------------------------------------------------------------------
# dataset statistics


@dataclass(frozen=True)
class SplitCounts:
    train: int = 0
    test: int = 0

    @property
    def total(self) -> int:
        return self.train + self.test


@dataclass(frozen=True)
class DatasetStats:
    """Per-category instance counts for the train/test splits."""

    categories: dict[str, SplitCounts]

    @property
    def totals(self) -> SplitCounts:
        return SplitCounts(sum(c.train for c in self.categories.values()),
                           sum(c.test for c in self.categories.values()))


def summarize_dataset(ann: AnnotationFile, splits: dict[str, str] | None = None) -> DatasetStats:
    """Count annotation instances per category and split.

    ``splits`` maps page ids to "train" or "test"; unlisted pages count as
    train.
    """
    splits = splits or {}
    bad = {v for v in splits.values() if v not in ("train", "test")}
    if bad:
        raise ValueError(f"split labels must be 'train' or 'test', got {sorted(bad)}")
    train: dict[str, int] = {name: 0 for name in CATEGORY_NAMES}
    test: dict[str, int] = {name: 0 for name in CATEGORY_NAMES}
    for page in ann.pages:
        bucket = test if splits.get(page.page_id) == "test" else train
        for seg in page.segments:
            bucket[seg.cls.category_name] += 1
    return DatasetStats({name: SplitCounts(train[name], test[name]) for name in CATEGORY_NAMES})


# --------------------------------------------------------------------------
# raster codecs


def save_classmap(cmap: ClassMap, path) -> None:
    validate_classmap(cmap)
    img = Image.fromarray(cmap.astype(np.uint8), mode="P")
    palette = []
    for code in range(256):
        palette.extend(CLASS_COLORS[LayoutClass(code)] if code < len(LayoutClass) else (0, 0, 0))
    img.putpalette(palette)
    img.save(path)


def load_classmap(path) -> ClassMap:
    with Image.open(path) as img:
        if img.mode not in ("P", "L"):
            raise DataFormatError(f"{path}: class maps must be single-channel, got mode {img.mode}")
        arr = np.asarray(img, dtype=np.uint8)
    try:
        validate_classmap(arr)
    except ValueError as exc:
        raise DataFormatError(f"{path}: {exc}") from exc
    return arr


def save_mask(mask: np.ndarray, path) -> None:
    Image.fromarray(np.where(mask, 255, 0).astype(np.uint8), mode="L").save(path)


def load_mask(path) -> np.ndarray:
    with Image.open(path) as img:
        arr = np.asarray(img.convert("L"))
    return arr > 127


def save_image(image: np.ndarray, path) -> None:
    Image.fromarray(image).save(path)


def load_image(path, gray: bool = True) -> np.ndarray:
    with Image.open(path) as img:
        return np.asarray(img.convert("L") if gray else img.convert("RGB"))


def save_probmap(prob: ProbMap, path) -> None:
    validate_probmap(prob)
    h, w, c = prob.shape
    with open(path, "wb") as fh:
        fh.write(LPM_MAGIC)
        fh.write(struct.pack("<III", w, h, c))
        fh.write(np.ascontiguousarray(prob, dtype="<f4").tobytes())


def load_probmap(path) -> ProbMap:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != LPM_MAGIC:
        raise DataFormatError(f"{path}: bad magic {blob[:4]!r}, expected {LPM_MAGIC!r}")
    if len(blob) < 16:
        raise DataFormatError(f"{path}: truncated header")
    w, h, c = struct.unpack("<III", blob[4:16])
    expected = 16 + 4 * w * h * c
    if w == 0 or h == 0 or c == 0 or len(blob) != expected:
        raise DataFormatError(f"{path}: payload is {len(blob)} bytes, expected {expected} "
                              f"for {w}x{h}x{c}")
    arr = np.frombuffer(blob, dtype="<f4", offset=16).reshape(h, w, c).astype(np.float32)
    try:
        validate_probmap(arr)
    except ValueError as exc:
        raise DataFormatError(f"{path}: {exc}") from exc
    return arr


# --------------------------------------------------------------------------
# layouts, atlases, page text


def _bbox_to_list(b: BBox) -> list[int]:
    return [b.x_min, b.y_min, b.x_max, b.y_max]


def _bbox_from_list(raw, path) -> BBox:
    try:
        return BBox(*(int(v) for v in raw))
    except (TypeError, ValueError) as exc:
        raise DataFormatError(f"{path}: bad bbox {raw!r}: {exc}") from exc


def save_layout(layout: OrderedLayout, path) -> None:
    _dump_json({
        "format": "newslayout/layout/1",
        "page_width": layout.page_width,
        "page_height": layout.page_height,
        "boxes": [
            {
                "order_index": box.order_index,
                "bbox": _bbox_to_list(box.bbox),
                "members": [
                    {"bbox": _bbox_to_list(s.bbox), "class": s.cls.category_name, "score": s.score}
                    for s in box.members
                ],
            }
            for box in layout.boxes
        ],
    }, path)


def load_layout(path) -> OrderedLayout:
    payload = load_json(path)
    _expect_format(payload, "newslayout/layout/1", path)
    try:
        boxes = tuple(
            SuperBox(
                bbox=_bbox_from_list(raw["bbox"], path),
                members=tuple(
                    Segment(_bbox_from_list(m["bbox"], path),
                            LayoutClass.from_category_name(m["class"]),
                            float(m.get("score", 1.0)))
                    for m in raw["members"]
                ),
                order_index=int(raw["order_index"]),
            )
            for raw in payload["boxes"]
        )
        return OrderedLayout(int(payload["page_width"]), int(payload["page_height"]), boxes)
    except (KeyError, ValueError) as exc:
        raise DataFormatError(f"{path}: {exc}") from exc


def save_atlas(atlas: MockAtlas, path) -> None:
    _dump_json({
        "format": "newslayout/atlas/1",
        "regions": [{"bbox": _bbox_to_list(r.bbox), "text": r.text} for r in atlas.regions],
    }, path)


def load_atlas(path) -> MockAtlas:
    payload = load_json(path)
    _expect_format(payload, "newslayout/atlas/1", path)
    try:
        return MockAtlas(tuple(
            AtlasRegion(_bbox_from_list(r["bbox"], path), str(r["text"]))
            for r in payload["regions"]
        ))
    except KeyError as exc:
        raise DataFormatError(f"{path}: atlas region missing key {exc}") from exc


def save_pagetext(page: PageText, path) -> None:
    _dump_json({
        "format": "newslayout/pagetext/1",
        "page_id": page.page_id,
        "blocks": [{"text": t, "status": s} for t, s in zip(page.texts, page.statuses)],
        "engine_calls": page.engine_calls,
        "warnings": list(page.warnings),
    }, path)


def load_pagetext(path) -> PageText:
    payload = load_json(path)
    _expect_format(payload, "newslayout/pagetext/1", path)
    blocks = payload["blocks"]
    return PageText(
        page_id=str(payload["page_id"]),
        texts=tuple(str(b["text"]) for b in blocks),
        statuses=tuple(str(b["status"]) for b in blocks),
        engine_calls=int(payload["engine_calls"]),
        warnings=tuple(payload.get("warnings", [])),
    )


# --------------------------------------------------------------------------
# metric reports


def save_seg_report(report: SegMetricsReport, path) -> None:
    per_class = {}
    for cls, metrics in report.per_class.items():
        per_class[cls.category_name if cls != LayoutClass.background else "background"] = (
            None if metrics is None else {
                "iou": metrics.iou,
                "accuracy": metrics.accuracy,
                "precision": metrics.precision,
                "recall": metrics.recall,
                "f_score": metrics.f_score,
            }
        )
    _dump_json({
        "format": "newslayout/seg-report/1",
        "per_class": per_class,
        "means": {
            "iou": report.mean_iou,
            "accuracy": report.mean_accuracy,
            "precision": report.mean_precision,
            "recall": report.mean_recall,
            "f_score": report.mean_f_score,
        },
    }, path)


def _class_from_report_name(name: str) -> LayoutClass:
    return LayoutClass.background if name == "background" else LayoutClass.from_category_name(name)


def load_seg_report(path) -> SegMetricsReport:
    payload = load_json(path)
    _expect_format(payload, "newslayout/seg-report/1", path)
    per_class = {}
    for name, metrics in payload["per_class"].items():
        per_class[_class_from_report_name(name)] = (
            None if metrics is None else ClassMetrics(**metrics)
        )
    means = payload["means"]
    return SegMetricsReport(per_class, means["iou"], means["accuracy"],
                            means["precision"], means["recall"], means["f_score"])


def _match_to_dict(m: SegmentMatch) -> dict:
    return {"segment": m.segment_id,
            "interval": list(m.interval) if m.interval else None,
            "score": m.score}


def _match_from_dict(raw: dict) -> SegmentMatch:
    interval = raw.get("interval")
    return SegmentMatch(int(raw["segment"]),
                        tuple(interval) if interval else None,
                        int(raw["score"]))


def _page_report_to_dict(r: OcrReport) -> dict:
    return {
        "page_id": r.page_id,
        "edit_distance": r.edit_distance,
        "word_recall": r.word_recall,
        "read_order": r.roa,
        "out_of_order": r.out_of_order,
        "total_blocks": r.total_blocks,
        "matches": [_match_to_dict(m) for m in r.matches],
    }


def _page_report_from_dict(raw: dict) -> OcrReport:
    return OcrReport(
        page_id=str(raw["page_id"]),
        edit_distance=float(raw["edit_distance"]),
        word_recall=float(raw["word_recall"]),
        roa=raw["read_order"],
        out_of_order=int(raw["out_of_order"]),
        total_blocks=int(raw["total_blocks"]),
        matches=tuple(_match_from_dict(m) for m in raw["matches"]),
    )


def save_ocr_report(report: CorpusOcrReport, path) -> None:
    _dump_json({
        "format": "newslayout/ocr-report/1",
        "pages": [_page_report_to_dict(r) for r in report.pages],
        "means": {
            "edit_distance": report.mean_edit_distance,
            "word_recall": report.mean_word_recall,
            "read_order": report.mean_roa,
        },
    }, path)


def load_ocr_report(path) -> CorpusOcrReport:
    payload = load_json(path)
    _expect_format(payload, "newslayout/ocr-report/1", path)
    means = payload["means"]
    return CorpusOcrReport(
        pages=tuple(_page_report_from_dict(r) for r in payload["pages"]),
        mean_edit_distance=float(means["edit_distance"]),
        mean_word_recall=float(means["word_recall"]),
        mean_roa=means["read_order"],
    )


def save_stats(stats: DatasetStats, path) -> None:
    _dump_json({
        "format": "newslayout/stats/1",
        "categories": {name: {"train": c.train, "test": c.test, "total": c.total}
                       for name, c in stats.categories.items()},
        "totals": {"train": stats.totals.train, "test": stats.totals.test,
                   "total": stats.totals.total},
    }, path)
