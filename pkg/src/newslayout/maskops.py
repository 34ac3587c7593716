"""Raster-to-boxes primitives: thresholding, morphology, labeling, box fitting.

Everything here is a pure function on numpy arrays.  Connectivity is
4-neighbour throughout so that text regions cannot leak across thin diagonal
gaps between columns.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import ndimage

from .model import (
    BBox,
    BinaryMask,
    ClassMap,
    GrayMap,
    LayoutClass,
    ProbMap,
    validate_binarymask,
    validate_graymap,
)

# cross-shaped structuring element = 4-connectivity
FOUR_CONNECTED = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)


@dataclass(frozen=True)
class ComponentLabels:
    """Per-pixel component ids; 0 is unlabeled background.

    Label ids are 1..num_components, assigned in raster-scan discovery order.
    """

    labels: np.ndarray
    num_components: int

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]


class OtsuResult(NamedTuple):
    threshold: int
    mask: BinaryMask
    degenerate: bool


def otsu_binarize(gray: GrayMap) -> OtsuResult:
    """Split a grayscale map at the threshold maximizing between-class variance.

    Foreground is strictly above the threshold.  The scan over all 256
    candidate thresholds is done in exact integer arithmetic, with ties broken
    toward the lowest threshold.  A map with a single intensity value has no
    between-class variance; it yields that value and an all-false mask with
    ``degenerate`` set.
    """
    validate_graymap(gray)
    hist = np.bincount(gray.ravel().astype(np.int64), minlength=256).tolist()
    total = gray.size
    total_sum = sum(i * h for i, h in enumerate(hist))

    # between-class variance at threshold t is, up to a constant factor,
    # (s0*n1 - s1*n0)^2 / (n0*n1); compare cross-multiplied to stay exact
    best_t = -1
    best_num = 0  # (s0*n1 - s1*n0)^2
    best_den = 1  # n0*n1
    n0 = 0
    s0 = 0
    for t in range(256):
        n0 += hist[t]
        s0 += t * hist[t]
        n1 = total - n0
        if n0 == 0 or n1 == 0:
            continue
        s1 = total_sum - s0
        num = (s0 * n1 - s1 * n0) ** 2
        den = n0 * n1
        if best_t < 0 or num * best_den > best_num * den:
            best_t, best_num, best_den = t, num, den

    if best_t < 0:  # single intensity value
        value = int(gray.ravel()[0])
        return OtsuResult(value, np.zeros_like(gray, dtype=bool), True)
    return OtsuResult(best_t, gray > best_t, False)


def morphological_open(mask: BinaryMask, radius: int = 1, iterations: int = 1) -> BinaryMask:
    """Erode then dilate with a square element of side ``2*radius + 1``.

    Pixels outside the map count as background, so regions thinner than the
    element disappear entirely.
    """
    validate_binarymask(mask)
    if radius < 1:
        raise ValueError("radius must be >= 1")
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    if not mask.any():
        return mask.copy()
    structure = np.ones((2 * radius + 1, 2 * radius + 1), dtype=bool)
    eroded = ndimage.binary_erosion(mask, structure=structure, iterations=iterations)
    return ndimage.binary_dilation(eroded, structure=structure, iterations=iterations)


def connected_components(mask: BinaryMask) -> ComponentLabels:
    """Label 4-connected foreground regions in raster-scan discovery order."""
    validate_binarymask(mask)
    labels, count = ndimage.label(mask, structure=FOUR_CONNECTED)
    if count > 1:
        # ndimage makes no ordering promise; renumber by first occurrence
        flat = labels.ravel()
        ids, first = np.unique(flat, return_index=True)
        keep = ids > 0
        ids, first = ids[keep], first[keep]
        remap = np.zeros(count + 1, dtype=labels.dtype)
        remap[ids[np.argsort(first)]] = np.arange(1, count + 1)
        labels = remap[labels]
    return ComponentLabels(labels, int(count))


def fit_bboxes(components: ComponentLabels, min_area: int = 1) -> list[BBox]:
    """Tight half-open box per component with at least ``min_area`` pixels."""
    if components.num_components == 0:
        return []
    counts = np.bincount(components.labels.ravel(), minlength=components.num_components + 1)
    boxes = []
    for label, slices in enumerate(ndimage.find_objects(components.labels), start=1):
        if slices is None or counts[label] < min_area:
            continue
        rows, cols = slices
        boxes.append(BBox(cols.start, rows.start, cols.stop, rows.stop))
    return boxes


def scale_boxes(
    boxes,
    from_dims: tuple[int, int],
    to_dims: tuple[int, int],
) -> list[BBox]:
    """Rescale boxes between map resolutions given as (width, height).

    Minimums round down and maximums round up so no covered pixel is lost;
    results are clamped to the target dimensions.
    """
    fw, fh = from_dims
    tw, th = to_dims
    if min(fw, fh, tw, th) <= 0:
        raise ValueError("dimensions must be positive")
    sx = tw / fw
    sy = th / fh
    out = []
    for box in boxes:
        x0 = max(0, math.floor(box.x_min * sx))
        y0 = max(0, math.floor(box.y_min * sy))
        x1 = min(tw, math.ceil(box.x_max * sx))
        y1 = min(th, math.ceil(box.y_max * sy))
        if x0 >= x1 or y0 >= y1:
            raise ValueError(
                f"box {box.as_tuple()} collapses when scaled from {from_dims} to {to_dims}"
            )
        out.append(BBox(x0, y0, x1, y1))
    return out


def separators_to_blocks(sep_mask: BinaryMask, min_area: int = 1) -> list[BBox]:
    """Boxes of the 4-connected regions left between separator pixels."""
    validate_binarymask(sep_mask)
    return fit_bboxes(connected_components(~sep_mask), min_area=min_area)


def argmax_classmap(prob: ProbMap) -> ClassMap:
    """Per-pixel most probable class; ties go to the lowest class code."""
    if prob.ndim != 3 or prob.size == 0:
        raise ValueError("expected a non-empty (height, width, classes) array")
    if prob.shape[2] > len(LayoutClass):
        raise ValueError(f"at most {len(LayoutClass)} classes supported, got {prob.shape[2]}")
    bad = ~np.isfinite(prob)
    if bad.any():
        y, x, c = np.argwhere(bad)[0]
        raise ValueError(f"non-finite probability at pixel ({int(x)}, {int(y)}) class {int(c)}")
    return prob.argmax(axis=2).astype(np.uint8)


def class_mask(cmap: ClassMap, cls: LayoutClass) -> BinaryMask:
    """Boolean mask of pixels carrying exactly this class."""
    return cmap == int(cls)
