"""Core value types for page layout analysis.

Pixel rectangles use the half-open convention [x_min, x_max) x [y_min, y_max),
so ``width == x_max - x_min`` and a single pixel at (x, y) is the box
(x, y, x+1, y+1).  Raster maps are numpy arrays indexed [row, column], i.e.
(height, width); standalone dimension tuples are always (width, height).

All types here are immutable and safe to share between workers.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

# Raster conventions (validated by the validate_* helpers below):
#   GrayMap:    2-D uint8, intensities 0-255
#   BinaryMask: 2-D bool
#   ClassMap:   2-D uint8, values are LayoutClass codes
#   ProbMap:    3-D float (height, width, num_classes), finite, in [0, 1]
GrayMap = np.ndarray
BinaryMask = np.ndarray
ClassMap = np.ndarray
ProbMap = np.ndarray


class LayoutClass(enum.IntEnum):
    """Content classes a page pixel or region can take.

    Codes are stable across serialization; ``background`` is never used as a
    segment class.
    """

    background = 0
    header = 1
    article_title = 2
    article_body = 3
    advertisement = 4
    image = 5
    table = 6
    other = 7

    @property
    def category_name(self) -> str:
        """Human-readable category name as used in annotation files."""
        return self.name.replace("_", " ")

    @classmethod
    def from_category_name(cls, name: str) -> "LayoutClass":
        try:
            return cls[name.strip().lower().replace(" ", "_")]
        except KeyError:
            raise ValueError(f"unknown layout category: {name!r}") from None


#: Annotation-file category names (the seven non-background classes).
CATEGORY_NAMES = tuple(c.category_name for c in LayoutClass if c != LayoutClass.background)


@dataclass(frozen=True, order=True)
class BBox:
    """Axis-aligned pixel rectangle, half-open on both axes."""

    x_min: int
    y_min: int
    x_max: int
    y_max: int

    def __post_init__(self):
        for v in (self.x_min, self.y_min, self.x_max, self.y_max):
            if not isinstance(v, (int, np.integer)):
                raise TypeError(f"BBox coordinates must be integers, got {v!r}")
        if self.x_min < 0 or self.y_min < 0:
            raise ValueError(f"BBox coordinates must be non-negative: {self}")
        if self.x_min >= self.x_max or self.y_min >= self.y_max:
            raise ValueError(f"BBox is empty: {self}")
        # normalize numpy integer inputs so serialization stays plain-int
        object.__setattr__(self, "x_min", int(self.x_min))
        object.__setattr__(self, "y_min", int(self.y_min))
        object.__setattr__(self, "x_max", int(self.x_max))
        object.__setattr__(self, "y_max", int(self.y_max))

    @property
    def width(self) -> int:
        return self.x_max - self.x_min

    @property
    def height(self) -> int:
        return self.y_max - self.y_min

    @property
    def area(self) -> int:
        return self.width * self.height

    def intersection_area(self, other: "BBox") -> int:
        w = min(self.x_max, other.x_max) - max(self.x_min, other.x_min)
        h = min(self.y_max, other.y_max) - max(self.y_min, other.y_min)
        return max(0, w) * max(0, h)

    def intersects(self, other: "BBox") -> bool:
        return self.intersection_area(other) > 0

    def union(self, other: "BBox") -> "BBox":
        """Tight axis-aligned cover of both boxes."""
        return BBox(
            min(self.x_min, other.x_min),
            min(self.y_min, other.y_min),
            max(self.x_max, other.x_max),
            max(self.y_max, other.y_max),
        )

    def clamp(self, width: int, height: int) -> "BBox":
        """Clip to a (width, height) page; raises if nothing remains."""
        x0, y0 = max(self.x_min, 0), max(self.y_min, 0)
        x1, y1 = min(self.x_max, width), min(self.y_max, height)
        if x0 >= x1 or y0 >= y1:
            raise ValueError(f"box {self.as_tuple()} lies outside {width}x{height} page")
        return BBox(x0, y0, x1, y1)

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.x_min, self.y_min, self.x_max, self.y_max)


def bbox_union(boxes) -> BBox:
    """Tight cover of a non-empty sequence of boxes."""
    boxes = list(boxes)
    if not boxes:
        raise ValueError("bbox_union of empty sequence")
    out = boxes[0]
    for b in boxes[1:]:
        out = out.union(b)
    return out


@dataclass(frozen=True)
class Segment:
    """A classified rectangle; score is 1.0 for ground truth."""

    bbox: BBox
    cls: LayoutClass
    score: float = 1.0

    def __post_init__(self):
        cls = LayoutClass(self.cls)
        if cls == LayoutClass.background:
            raise ValueError("segments cannot carry the background class")
        if not (0.0 <= self.score <= 1.0):
            raise ValueError(f"segment score must be in [0, 1], got {self.score}")
        object.__setattr__(self, "cls", cls)
        object.__setattr__(self, "score", float(self.score))


@dataclass(frozen=True)
class SuperBox:
    """Merged group of segments sent to the OCR engine as one block."""

    bbox: BBox
    members: tuple[Segment, ...]
    order_index: int

    def __post_init__(self):
        members = tuple(self.members)
        if not members:
            raise ValueError("SuperBox needs at least one member")
        if self.order_index < 0:
            raise ValueError("order_index must be non-negative")
        tight = bbox_union(m.bbox for m in members)
        if tight != self.bbox:
            raise ValueError(
                f"SuperBox bbox {self.bbox.as_tuple()} is not the tight union "
                f"{tight.as_tuple()} of its members"
            )
        object.__setattr__(self, "members", members)


@dataclass(frozen=True)
class OrderedLayout:
    """Read-ordered super boxes for one page."""

    page_width: int
    page_height: int
    boxes: tuple[SuperBox, ...]

    def __post_init__(self):
        if self.page_width <= 0 or self.page_height <= 0:
            raise ValueError("page dimensions must be positive")
        boxes = tuple(self.boxes)
        if [b.order_index for b in boxes] != list(range(len(boxes))):
            raise ValueError("boxes must be sorted by order_index 0..n-1 with no gaps")
        object.__setattr__(self, "boxes", boxes)


@dataclass(frozen=True)
class PageAnnotation:
    """Ground-truth segments for one page."""

    page_id: str
    page_width: int
    page_height: int
    segments: tuple[Segment, ...]

    def __post_init__(self):
        if self.page_width <= 0 or self.page_height <= 0:
            raise ValueError("page dimensions must be positive")
        segments = tuple(self.segments)
        for s in segments:
            b = s.bbox
            if b.x_max > self.page_width or b.y_max > self.page_height:
                raise ValueError(
                    f"segment {b.as_tuple()} exceeds page bounds "
                    f"{self.page_width}x{self.page_height} on page {self.page_id!r}"
                )
        object.__setattr__(self, "segments", segments)


@dataclass(frozen=True)
class AtlasRegion:
    """One rectangle-to-text record of a mock OCR atlas."""

    bbox: BBox
    text: str


@dataclass(frozen=True)
class MockAtlas:
    """Rectangle-to-text mapping standing in for a real OCR engine."""

    regions: tuple[AtlasRegion, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "regions", tuple(self.regions))


# --------------------------------------------------------------------------
# raster validators


def _check_2d_nonempty(arr: np.ndarray, what: str) -> None:
    if not isinstance(arr, np.ndarray) or arr.ndim != 2 or arr.size == 0:
        raise ValueError(f"{what} must be a non-empty 2-D array")


def validate_graymap(arr: np.ndarray) -> None:
    _check_2d_nonempty(arr, "GrayMap")
    if not np.issubdtype(arr.dtype, np.integer):
        raise ValueError("GrayMap must hold integer intensities")
    if arr.min() < 0 or arr.max() > 255:
        raise ValueError("GrayMap intensities must lie in 0..255")


def validate_binarymask(arr: np.ndarray) -> None:
    _check_2d_nonempty(arr, "BinaryMask")
    if arr.dtype != np.bool_:
        raise ValueError("BinaryMask must be boolean")


def validate_classmap(arr: np.ndarray) -> None:
    _check_2d_nonempty(arr, "ClassMap")
    if not np.issubdtype(arr.dtype, np.integer):
        raise ValueError("ClassMap must hold integer class codes")
    if arr.min() < 0 or arr.max() > max(LayoutClass):
        bad = arr[(arr < 0) | (arr > max(LayoutClass))]
        raise ValueError(f"ClassMap contains invalid class codes, e.g. {bad.ravel()[0]}")


def validate_probmap(arr: np.ndarray) -> None:
    if not isinstance(arr, np.ndarray) or arr.ndim != 3 or arr.size == 0:
        raise ValueError("ProbMap must be a non-empty 3-D array (height, width, classes)")
    if not np.isfinite(arr).all():
        y, x, c = np.argwhere(~np.isfinite(arr))[0]
        raise ValueError(f"ProbMap has a non-finite value at pixel ({int(x)}, {int(y)}) class {int(c)}")
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise ValueError("ProbMap values must lie in [0, 1]")
