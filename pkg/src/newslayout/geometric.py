"""Geometric post-processing: per-class mask-to-boxes plus gap closure.

The mask-to-boxes stage binarizes each class channel, opens it, labels
connected components and fits boxes, then scales them to page resolution.
Scaling inflates the small gaps between neighbouring columns, so a final
snapping pass clusters nearby box edges and moves each cluster onto its
centroid, letting adjacent boxes share an edge instead of leaving a gap that
would cost characters at OCR time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .maskops import (
    class_mask,
    connected_components,
    fit_bboxes,
    morphological_open,
    otsu_binarize,
    scale_boxes,
)
from .model import BBox, ClassMap, LayoutClass, ProbMap, Segment, validate_classmap, validate_probmap


@dataclass(frozen=True)
class GeometricParams:
    """Knobs for the mask-to-boxes stage, in pixels.

    ``min_area`` applies at map (processing) resolution; ``cluster_epsilon``
    applies at page resolution, after upscaling.
    """

    open_radius: int = 1
    open_iterations: int = 2
    min_area: int = 64
    cluster_epsilon: int = 12

    def __post_init__(self):
        if min(self.open_radius, self.open_iterations, self.min_area, self.cluster_epsilon) <= 0:
            raise ValueError("all geometric parameters must be strictly positive")


class SnapCollapseError(ValueError):
    """Snapping moved a box's opposing edges onto each other."""


def _snap_axis(values: list[int], epsilon: int) -> dict[int, int]:
    """Map each coordinate to its single-linkage cluster's rounded centroid.

    Sorted coordinates chain into one cluster while consecutive gaps stay
    within ``epsilon``; every member is replaced by the cluster mean, rounded
    half-up.  Multiplicity counts: an edge shared by several boxes pulls the
    centroid toward itself.
    """
    snapped: dict[int, int] = {}
    ordered = sorted(values)
    start = 0
    for i in range(1, len(ordered) + 1):
        if i == len(ordered) or ordered[i] - ordered[i - 1] > epsilon:
            cluster = ordered[start:i]
            centroid = math.floor(sum(cluster) / len(cluster) + 0.5)
            for v in cluster:
                snapped[v] = centroid
            start = i
    return snapped


def cluster_snap_boxes(boxes, epsilon: int) -> list[BBox]:
    """Snap nearby box edges onto shared coordinates.

    The x and y edge coordinates are clustered independently, which keeps the
    boxes axis-aligned.  Output order equals input order.  Raises
    SnapCollapseError if a box narrower than its cluster span collapses.
    """
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    boxes = list(boxes)
    if not boxes:
        return []
    snap_x = _snap_axis([v for b in boxes for v in (b.x_min, b.x_max)], epsilon)
    snap_y = _snap_axis([v for b in boxes for v in (b.y_min, b.y_max)], epsilon)
    out = []
    for i, b in enumerate(boxes):
        x0, x1 = snap_x[b.x_min], snap_x[b.x_max]
        y0, y1 = snap_y[b.y_min], snap_y[b.y_max]
        if x0 >= x1 or y0 >= y1:
            raise SnapCollapseError(
                f"box {i} {b.as_tuple()} collapses to ({x0}, {y0}, {x1}, {y1}) under epsilon={epsilon}"
            )
        out.append(BBox(x0, y0, x1, y1))
    return out


def _class_channels(input_map: np.ndarray):
    """Yield (cls, mask, prob_channel) per non-background class present."""
    if input_map.ndim == 2:
        validate_classmap(input_map)
        for cls in LayoutClass:
            if cls == LayoutClass.background:
                continue
            mask = class_mask(input_map, cls)
            if mask.any():
                yield cls, mask, None
    else:
        validate_probmap(input_map)
        for code in range(1, input_map.shape[2]):
            channel = input_map[:, :, code]
            gray = np.clip(np.rint(channel * 255), 0, 255).astype(np.uint8)
            result = otsu_binarize(gray)
            if result.degenerate or not result.mask.any():
                continue
            yield LayoutClass(code), result.mask, channel


def mask_to_segments(
    input_map: ClassMap | ProbMap,
    page_dims: tuple[int, int],
    params: GeometricParams = GeometricParams(),
) -> list[Segment]:
    """Per-class mask-to-boxes conversion, without the snapping pass.

    Accepts either a class map (exact per-class masks) or a probability map
    (per-class Otsu binarization of each non-background channel).  Per class:
    open, label components, fit boxes over ``min_area``, scale to
    ``page_dims``.  Probability inputs carry the component's mean class
    probability as the segment score.
    """
    segments: list[Segment] = []
    map_h, map_w = input_map.shape[:2]
    for cls, mask, channel in _class_channels(input_map):
        opened = morphological_open(mask, params.open_radius, params.open_iterations)
        components = connected_components(opened)
        boxes = fit_bboxes(components, min_area=params.min_area)
        if not boxes:
            continue
        scores = []
        for box in boxes:
            if channel is None:
                scores.append(1.0)
            else:
                region = opened[box.y_min : box.y_max, box.x_min : box.x_max]
                values = channel[box.y_min : box.y_max, box.x_min : box.x_max][region]
                scores.append(float(values.mean()))
        scaled = scale_boxes(boxes, (map_w, map_h), page_dims)
        segments.extend(Segment(b, cls, s) for b, s in zip(scaled, scores))
    return segments


def geometric_pipeline(
    input_map: ClassMap | ProbMap,
    page_dims: tuple[int, int],
    params: GeometricParams = GeometricParams(),
) -> list[Segment]:
    """Full mask-to-segments conversion: extract boxes, then snap edges
    across all classes jointly to close scale-inflated gaps."""
    segments = mask_to_segments(input_map, page_dims, params)
    if not segments:
        return []
    snapped = cluster_snap_boxes([s.bbox for s in segments], params.cluster_epsilon)
    return [Segment(box, s.cls, s.score) for s, box in zip(segments, snapped)]
