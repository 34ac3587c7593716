import random
import tempfile
import time

import numpy as np
import pytest

from newslayout.engine import (
    EngineError,
    EngineTimeout,
    OcrEngineSpec,
    crop_blocks,
    recognize,
    run_page_ocr,
)
from newslayout.model import (
    AtlasRegion,
    BBox,
    LayoutClass,
    MockAtlas,
    OrderedLayout,
    Segment,
    SuperBox,
)


def layout_of(boxes, page=(200, 200)):
    supers = []
    for i, b in enumerate(boxes):
        seg = Segment(b, LayoutClass.article_body)
        supers.append(SuperBox(b, (seg,), i))
    return OrderedLayout(page[0], page[1], tuple(supers))


def gradient_image(w=200, h=200):
    return (np.arange(w * h, dtype=np.int64).reshape(h, w) % 251).astype(np.uint8)


# --------------------------------------------------------------------------
# cropping


def test_crop_matches_box_dimensions():
    image = gradient_image(20, 20)
    crops = crop_blocks(image, layout_of([BBox(0, 0, 10, 10)], page=(20, 20)))
    assert crops[0].pixels.shape == (10, 10)
    assert not crops[0].clamped
    assert np.array_equal(crops[0].pixels, image[0:10, 0:10])


def test_crop_clamps_overhanging_box():
    image = gradient_image(20, 20)
    crops = crop_blocks(image, layout_of([BBox(10, 5, 23, 15)], page=(30, 20)))
    assert crops[0].clamped
    assert crops[0].bbox == BBox(10, 5, 20, 15)
    assert crops[0].pixels.shape == (10, 10)


def test_crop_fully_outside_raises():
    image = gradient_image(20, 20)
    with pytest.raises(ValueError, match="outside"):
        crop_blocks(image, layout_of([BBox(30, 30, 40, 40)], page=(50, 50)))


def test_crops_preserve_read_order():
    image = gradient_image(100, 100)
    boxes = [BBox(0, 0, 10, 10), BBox(50, 50, 70, 70), BBox(20, 20, 30, 40)]
    crops = crop_blocks(image, layout_of(boxes, page=(100, 100)))
    assert [c.bbox for c in crops] == boxes


def test_crop_padding_adds_context():
    image = gradient_image(50, 50)
    crops = crop_blocks(image, layout_of([BBox(10, 10, 20, 20)], page=(50, 50)), padding=5)
    assert crops[0].bbox == BBox(5, 5, 25, 25)
    assert not crops[0].clamped


# --------------------------------------------------------------------------
# engines


def atlas_for(boxes, texts):
    return MockAtlas(tuple(AtlasRegion(b, t) for b, t in zip(boxes, texts)))


def test_mock_atlas_exact_region():
    box = BBox(0, 0, 10, 10)
    spec = OcrEngineSpec(kind="mock-atlas", atlas=atlas_for([box], ["hello world"]))
    crops = crop_blocks(gradient_image(20, 20), layout_of([box], page=(20, 20)))
    assert recognize(crops[0], spec) == "hello world"


def test_mock_atlas_merged_crop_concatenates_regions_in_reading_order():
    top, bottom = BBox(0, 0, 10, 10), BBox(0, 12, 10, 22)
    spec = OcrEngineSpec(kind="mock-atlas", atlas=atlas_for([bottom, top], ["below", "above"]))
    crops = crop_blocks(gradient_image(30, 30), layout_of([BBox(0, 0, 10, 22)], page=(30, 30)))
    assert recognize(crops[0], spec) == "above\nbelow"


def test_mock_atlas_partial_overlap_takes_best_region():
    a, b = BBox(0, 0, 20, 20), BBox(30, 0, 50, 20)
    spec = OcrEngineSpec(kind="mock-atlas", atlas=atlas_for([a, b], ["left", "right"]))
    # covers 25% of a and nothing of b
    crops = crop_blocks(gradient_image(60, 60), layout_of([BBox(10, 10, 20, 30)], page=(60, 60)))
    assert recognize(crops[0], spec) == "left"


def test_mock_atlas_no_overlap_is_empty():
    spec = OcrEngineSpec(kind="mock-atlas", atlas=atlas_for([BBox(0, 0, 5, 5)], ["x"]))
    crops = crop_blocks(gradient_image(60, 60), layout_of([BBox(40, 40, 50, 50)], page=(60, 60)))
    assert recognize(crops[0], spec) == ""


def external_spec(command, **kw):
    return OcrEngineSpec(kind="external-command", command=command, **kw)


def test_external_command_reads_stdout():
    spec = external_spec("python3 -c 'print(\"recognized text\")'", retries=0)
    crops = crop_blocks(gradient_image(20, 20), layout_of([BBox(0, 0, 10, 10)], page=(20, 20)))
    assert recognize(crops[0], spec) == "recognized text"


def test_external_command_substitutes_input_path():
    spec = external_spec("python3 -c 'import sys; print(sys.argv[1])' {input}", retries=0)
    crops = crop_blocks(gradient_image(20, 20), layout_of([BBox(0, 0, 10, 10)], page=(20, 20)))
    out = recognize(crops[0], spec)
    assert out.endswith("crop.png")


def test_external_command_failure_carries_exit_status():
    spec = external_spec("sh -c 'echo boom >&2; exit 3'", retries=0)
    crops = crop_blocks(gradient_image(20, 20), layout_of([BBox(0, 0, 10, 10)], page=(20, 20)))
    with pytest.raises(EngineError, match="exited 3") as err:
        recognize(crops[0], spec)
    assert "boom" in str(err.value)


def test_external_command_timeout():
    spec = external_spec("sleep 5", timeout=0.2, retries=0)
    crops = crop_blocks(gradient_image(20, 20), layout_of([BBox(0, 0, 10, 10)], page=(20, 20)))
    started = time.perf_counter()
    with pytest.raises(EngineTimeout):
        recognize(crops[0], spec)
    assert time.perf_counter() - started < 2.0  # no retry beyond the configured count


def test_external_command_retry_can_recover(tmp_path):
    flag = tmp_path / "tried"
    cmd = f"sh -c 'test -e {flag} && echo ok || {{ touch {flag}; exit 1; }}'"
    spec = external_spec(cmd, retries=1)
    crops = crop_blocks(gradient_image(20, 20), layout_of([BBox(0, 0, 10, 10)], page=(20, 20)))
    assert recognize(crops[0], spec) == "ok"


def test_no_temp_files_left_behind(tmp_path, monkeypatch):
    monkeypatch.setattr(tempfile, "tempdir", str(tmp_path))
    crops = crop_blocks(gradient_image(20, 20), layout_of([BBox(0, 0, 10, 10)], page=(20, 20)))
    assert recognize(crops[0], external_spec("python3 -c 'print(1)'", retries=0)) == "1"
    with pytest.raises(EngineError):
        recognize(crops[0], external_spec("sh -c 'exit 1'", retries=0))
    assert list(tmp_path.iterdir()) == []


def test_spec_validation():
    with pytest.raises(ValueError):
        OcrEngineSpec(kind="cloud")
    with pytest.raises(ValueError):
        OcrEngineSpec(kind="external-command")
    with pytest.raises(ValueError):
        OcrEngineSpec(kind="mock-atlas", atlas=None)
    with pytest.raises(ValueError):
        OcrEngineSpec(kind="mock-atlas", atlas=MockAtlas(), timeout=0)


# --------------------------------------------------------------------------
# page runs


def page_fixture():
    boxes = [BBox(0, 0, 50, 40), BBox(0, 50, 50, 90), BBox(60, 0, 110, 90)]
    texts = ["first block", "second block", "third block"]
    layout = layout_of(boxes, page=(120, 100))
    spec = OcrEngineSpec(kind="mock-atlas", atlas=atlas_for(boxes, texts), max_concurrency=3)
    return gradient_image(120, 100), layout, spec, texts


def test_page_ocr_reassembles_in_read_order():
    image, layout, spec, texts = page_fixture()
    page = run_page_ocr(image, layout, spec, page_id="p1")
    assert list(page.texts) == texts
    assert page.statuses == ("ok", "ok", "ok")
    assert page.engine_calls == len(layout.boxes)


def test_page_ocr_order_invariant_to_completion_order():
    image, layout, spec, texts = page_fixture()
    rng = random.Random(99)
    delays = {c.bbox.as_tuple(): rng.uniform(0.0, 0.05) for c in crop_blocks(image, layout)}

    def slow_recognize(crop):
        time.sleep(delays[crop.bbox.as_tuple()])
        return recognize(crop, spec)

    for _ in range(5):
        page = run_page_ocr(image, layout, spec, recognize_fn=slow_recognize)
        assert list(page.texts) == texts


def test_page_ocr_records_partial_failures():
    image, layout, spec, texts = page_fixture()

    def flaky(crop):
        if crop.bbox.x_min == 0 and crop.bbox.y_min == 50:
            raise EngineError("simulated failure")
        return recognize(crop, spec)

    page = run_page_ocr(image, layout, spec, recognize_fn=flaky)
    assert page.ok_count == 2
    assert page.statuses[1].startswith("error:")
    assert page.texts[0] == texts[0] and page.texts[2] == texts[2]


def test_page_ocr_all_failed_raises():
    image, layout, spec, _ = page_fixture()

    def broken(_):
        raise EngineError("dead engine")

    with pytest.raises(EngineError, match="all 3 blocks failed"):
        run_page_ocr(image, layout, spec, recognize_fn=broken)


def test_page_ocr_baseline_single_call():
    image, layout, spec, texts = page_fixture()
    seg = Segment(BBox(0, 0, 120, 100), LayoutClass.other)
    baseline = OrderedLayout(120, 100, (SuperBox(seg.bbox, (seg,), 0),))
    page = run_page_ocr(image, baseline, spec)
    assert page.engine_calls == 1
    for text in texts:
        assert text in page.texts[0]


def test_page_ocr_warns_about_clamped_boxes():
    image, layout, spec, _ = page_fixture()
    boxes = [BBox(0, 0, 50, 40), BBox(60, 0, 125, 90)]  # second sticks out 5 px
    layout = layout_of(boxes, page=(130, 100))
    page = run_page_ocr(image, layout, spec)
    assert any("clamped" in w for w in page.warnings)
