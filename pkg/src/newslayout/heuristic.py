"""Heuristic post-processing: merge column-aligned boxes, emit a read order.

Boxes whose left and right edges both agree within a tolerance belong to the
same text column and are merged into one super box regardless of class; one
OCR call per super box instead of one per box.  Read order is column-major:
columns left to right, top to bottom inside a column.
"""

from __future__ import annotations

from dataclasses import dataclass

from .model import BBox, OrderedLayout, SuperBox, bbox_union


@dataclass(frozen=True)
class HeuristicParams:
    x_align_tolerance: int = 15
    column_overlap_ratio: float = 0.5

    def __post_init__(self):
        if self.x_align_tolerance < 0:
            raise ValueError("x_align_tolerance must be >= 0")
        if not (0.0 <= self.column_overlap_ratio <= 1.0):
            raise ValueError("column_overlap_ratio must be in [0, 1]")


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, i: int) -> int:
        while self.parent[i] != i:
            self.parent[i] = self.parent[self.parent[i]]
            i = self.parent[i]
        return i

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def _grouped(n: int, related) -> list[list[int]]:
    """Partition 0..n-1 by the transitive closure of a pairwise relation."""
    uf = _UnionFind(n)
    for i in range(n):
        for j in range(i + 1, n):
            if related(i, j):
                uf.union(i, j)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(uf.find(i), []).append(i)
    # discovery order: by smallest member index
    return [groups[r] for r in sorted(groups, key=lambda r: min(groups[r]))]


def merge_vertical(segments, params: HeuristicParams = HeuristicParams()) -> list[SuperBox]:
    """Merge vertically aligned segments into super boxes.

    Two segments are direct merge candidates when both their x_min and x_max
    differ by at most the tolerance; merging is the transitive closure of that
    relation.  Every input segment lands in exactly one super box.
    """
    segments = list(segments)
    tol = params.x_align_tolerance

    def aligned(i: int, j: int) -> bool:
        a, b = segments[i].bbox, segments[j].bbox
        return abs(a.x_min - b.x_min) <= tol and abs(a.x_max - b.x_max) <= tol

    boxes = []
    for order, group in enumerate(_grouped(len(segments), aligned)):
        members = tuple(segments[i] for i in group)
        boxes.append(SuperBox(bbox_union(m.bbox for m in members), members, order))
    return boxes


def _column_key(members: list[BBox]) -> tuple[int, int]:
    return (min(b.x_min for b in members), min(b.y_min for b in members))


def order_reading(
    boxes,
    page_dims: tuple[int, int],
    params: HeuristicParams = HeuristicParams(),
) -> OrderedLayout:
    """Assign a column-major read order to super boxes.

    Boxes sharing enough horizontal overlap (relative to the narrower of the
    two) are grouped into one column; columns run left to right and each
    column reads top to bottom.  Deterministic and independent of input order.
    """
    boxes = list(boxes)
    if not boxes:
        raise ValueError("cannot order an empty layout")

    def same_column(i: int, j: int) -> bool:
        a, b = boxes[i].bbox, boxes[j].bbox
        overlap = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
        return overlap >= params.column_overlap_ratio * min(a.width, b.width)

    columns = _grouped(len(boxes), same_column)
    columns.sort(key=lambda group: _column_key([boxes[i].bbox for i in group]))

    ordered = []
    for group in columns:
        group = sorted(group, key=lambda i: (boxes[i].bbox.y_min, boxes[i].bbox.x_min,
                                             boxes[i].bbox.y_max, boxes[i].bbox.x_max))
        for i in group:
            b = boxes[i]
            ordered.append(SuperBox(b.bbox, b.members, len(ordered)))
    return OrderedLayout(page_dims[0], page_dims[1], tuple(ordered))


def heuristic_pipeline(
    segments,
    page_dims: tuple[int, int],
    params: HeuristicParams = HeuristicParams(),
) -> OrderedLayout:
    """merge_vertical then order_reading."""
    return order_reading(merge_vertical(segments, params), page_dims, params)
