from collections import Counter

import pytest
from hypothesis import given, settings, strategies as st

from newslayout.heuristic import (
    HeuristicParams,
    heuristic_pipeline,
    merge_vertical,
    order_reading,
)
from newslayout.model import BBox, LayoutClass, Segment, SuperBox


def seg(x0, y0, x1, y1, cls=LayoutClass.article_body):
    return Segment(BBox(x0, y0, x1, y1), cls)


def single(s, order=0):
    return SuperBox(s.bbox, (s,), order)


segments_st = st.lists(
    st.tuples(st.integers(0, 400), st.integers(0, 400),
              st.integers(10, 120), st.integers(10, 120), st.integers(1, 7))
    .map(lambda t: Segment(BBox(t[0], t[1], t[0] + t[2], t[1] + t[3]), LayoutClass(t[4]))),
    min_size=1, max_size=10,
)


# --------------------------------------------------------------------------
# merging


def test_merge_aligned_column():
    a, b = seg(100, 0, 300, 200), seg(100, 210, 300, 400)
    boxes = merge_vertical([a, b], HeuristicParams(x_align_tolerance=5))
    assert len(boxes) == 1
    assert boxes[0].bbox == BBox(100, 0, 300, 400)
    assert boxes[0].members == (a, b)


def test_merge_keeps_side_by_side_apart():
    a, b = seg(100, 0, 300, 200), seg(400, 0, 600, 200)
    boxes = merge_vertical([a, b], HeuristicParams(x_align_tolerance=5))
    assert len(boxes) == 2


def test_merge_is_transitive():
    a = seg(100, 0, 300, 50)
    b = seg(104, 60, 304, 110)
    c = seg(108, 120, 308, 170)  # near b but not a
    boxes = merge_vertical([a, b, c], HeuristicParams(x_align_tolerance=5))
    assert len(boxes) == 1
    assert len(boxes[0].members) == 3


def test_merge_crosses_classes():
    title = seg(100, 0, 300, 40, LayoutClass.article_title)
    body = seg(100, 50, 300, 400, LayoutClass.article_body)
    boxes = merge_vertical([title, body], HeuristicParams(x_align_tolerance=5))
    assert len(boxes) == 1


@settings(max_examples=150, deadline=None)
@given(segments_st, st.integers(0, 30))
def test_merge_partitions_input(segments, tol):
    boxes = merge_vertical(segments, HeuristicParams(x_align_tolerance=tol))
    merged_members = [m for b in boxes for m in b.members]
    assert Counter(id(m) for m in merged_members) == Counter(id(s) for s in segments)
    assert len(boxes) <= len(segments)
    assert sorted(b.order_index for b in boxes) == list(range(len(boxes)))


# --------------------------------------------------------------------------
# ordering


def test_order_single_box():
    layout = order_reading([single(seg(0, 0, 10, 10))], (20, 20))
    assert [b.order_index for b in layout.boxes] == [0]


def test_order_two_columns_column_major():
    l_top = single(seg(0, 0, 100, 100))
    l_bot = single(seg(0, 120, 100, 220), 1)
    r_top = single(seg(150, 0, 250, 100), 2)
    r_bot = single(seg(150, 120, 250, 220), 3)
    layout = order_reading([r_bot, l_bot, r_top, l_top], (300, 300))
    got = [b.bbox.as_tuple() for b in layout.boxes]
    assert got == [l_top.bbox.as_tuple(), l_bot.bbox.as_tuple(),
                   r_top.bbox.as_tuple(), r_bot.bbox.as_tuple()]


def test_order_sorts_stack_top_to_bottom():
    a = single(seg(10, 200, 90, 280))
    b = single(seg(10, 0, 90, 80), 1)
    c = single(seg(10, 100, 90, 180), 2)
    layout = order_reading([a, b, c], (100, 300))
    assert [box.bbox.y_min for box in layout.boxes] == [0, 100, 200]


def test_order_empty_is_an_error():
    with pytest.raises(ValueError):
        order_reading([], (100, 100))


@settings(max_examples=120, deadline=None)
@given(segments_st, st.randoms(use_true_random=False))
def test_order_invariant_to_input_permutation(segments, rnd):
    boxes = [single(s, i) for i, s in enumerate(segments)]
    reference = order_reading(boxes, (600, 600))
    shuffled = list(boxes)
    rnd.shuffle(shuffled)
    shuffled = [SuperBox(b.bbox, b.members, i) for i, b in enumerate(shuffled)]
    again = order_reading(shuffled, (600, 600))
    assert [b.bbox for b in again.boxes] == [b.bbox for b in reference.boxes]
    assert [b.order_index for b in again.boxes] == list(range(len(segments)))


@settings(max_examples=120, deadline=None)
@given(segments_st)
def test_order_is_column_major(segments):
    params = HeuristicParams()
    boxes = [single(s, i) for i, s in enumerate(segments)]
    layout = order_reading(boxes, (600, 600), params)
    position = {b.bbox.as_tuple(): b.order_index for b in layout.boxes}
    for i, a in enumerate(layout.boxes):
        for b in layout.boxes[i + 1:]:
            overlap = (min(a.bbox.x_max, b.bbox.x_max) - max(a.bbox.x_min, b.bbox.x_min))
            if overlap >= params.column_overlap_ratio * min(a.bbox.width, b.bbox.width):
                first, second = (a, b) if a.bbox.y_min < b.bbox.y_min else (b, a)
                if first.bbox.y_min != second.bbox.y_min:
                    assert position[first.bbox.as_tuple()] < position[second.bbox.as_tuple()]


# --------------------------------------------------------------------------
# pipeline


def test_pipeline_two_column_page():
    segs = [
        seg(150, 120, 250, 220),  # right bottom
        seg(0, 0, 100, 100),      # left top
        seg(150, 0, 250, 100),    # right top
        seg(0, 120, 100, 220),    # left bottom
    ]
    layout = heuristic_pipeline(segs, (300, 300), HeuristicParams(x_align_tolerance=5))
    assert len(layout.boxes) == 2
    assert layout.boxes[0].bbox == BBox(0, 0, 100, 220)
    assert layout.boxes[1].bbox == BBox(150, 0, 250, 220)


def test_pipeline_empty_is_an_error():
    with pytest.raises(ValueError):
        heuristic_pipeline([], (100, 100))


def test_pipeline_single_column_needs_one_call():
    segs = [seg(10, i * 50, 110, i * 50 + 40) for i in range(6)]
    layout = heuristic_pipeline(segs, (200, 400))
    assert len(layout.boxes) == 1
    assert len(layout.boxes[0].members) == 6


def test_params_validation():
    with pytest.raises(ValueError):
        HeuristicParams(x_align_tolerance=-1)
    with pytest.raises(ValueError):
        HeuristicParams(column_overlap_ratio=1.5)
