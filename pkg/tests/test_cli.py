import json

import numpy as np
import pytest

from newslayout import dataio
from newslayout.cli import main
from newslayout.model import LayoutClass


@pytest.fixture()
def corpus(tmp_path):
    """Three synthetic pages: raster, class map, atlas, ground-truth text."""
    out = tmp_path / "corpus"
    spec = tmp_path / "synth.json"
    spec.write_text(json.dumps({"pages": 3, "columns": 2, "blocks_per_column": 2}))
    assert main(["synth", str(out), "--spec", str(spec), "--seed", "41"]) == 0
    return out


def classes_dir(corpus, tmp_path):
    d = tmp_path / "classes"
    d.mkdir(exist_ok=True)
    for p in sorted(corpus.glob("*.classes.png")):
        (d / p.name.replace(".classes", "")).write_bytes(p.read_bytes())
    return d


def test_synth_outputs(corpus):
    images = sorted(corpus.glob("synth-*.png"))
    assert len(images) == 6  # 3 rasters + 3 class maps
    assert len(list(corpus.glob("*.atlas.json"))) == 3
    assert len(list(corpus.glob("*.txt"))) == 3
    ann = dataio.load_annotations(corpus / "annotations.json")
    assert len(ann.pages) == 3


def test_postprocess_writes_layouts_and_overlays(corpus, tmp_path):
    maps = classes_dir(corpus, tmp_path)
    out = tmp_path / "layouts"
    assert main(["postprocess", str(maps), str(out), "--overlay"]) == 0
    layouts = sorted(out.glob("*.layout.json"))
    assert len(layouts) == 3
    assert len(list(out.glob("*.overlay.png"))) == 3
    layout = dataio.load_layout(layouts[0])
    assert len(layout.boxes) == 2  # two columns, two merged blocks each
    assert all(len(b.members) == 2 for b in layout.boxes)


def test_postprocess_counts_corrupt_page_as_failure(corpus, tmp_path):
    maps = classes_dir(corpus, tmp_path)
    (maps / "broken.png").write_bytes(b"not a png")
    out = tmp_path / "layouts"
    assert main(["postprocess", str(maps), str(out)]) == 1
    assert len(list(out.glob("*.layout.json"))) == 3  # good pages still written


def test_postprocess_method_separators(tmp_path):
    sep = np.zeros((90, 90), dtype=bool)
    sep[44:46, :] = True
    sep[:, 44:46] = True
    maps = tmp_path / "seps"
    maps.mkdir()
    dataio.save_mask(sep, maps / "cross.png")
    out = tmp_path / "blocks"
    assert main(["postprocess", str(maps), str(out), "--method", "separators"]) == 0
    layout = dataio.load_layout(out / "cross.layout.json")
    assert len(layout.boxes) == 4
    assert all(b.members[0].cls is LayoutClass.other for b in layout.boxes)


def test_postprocess_empty_input_dir_is_config_error(tmp_path):
    empty = tmp_path / "none"
    empty.mkdir()
    assert main(["postprocess", str(empty), str(tmp_path / "out")]) == 2


def test_postprocess_workers_match_serial_run(corpus, tmp_path):
    maps = classes_dir(corpus, tmp_path)
    serial, parallel = tmp_path / "serial", tmp_path / "parallel"
    assert main(["postprocess", str(maps), str(serial)]) == 0
    assert main(["postprocess", str(maps), str(parallel), "--workers", "4"]) == 0
    for p in sorted(serial.glob("*.layout.json")):
        assert (parallel / p.name).read_bytes() == p.read_bytes()


def test_layout_eval_perfect_prediction(corpus, tmp_path, capsys):
    maps = classes_dir(corpus, tmp_path)
    report_path = tmp_path / "seg.json"
    assert main(["layout-eval", str(maps), str(maps), "-o", str(report_path)]) == 0
    report = dataio.load_seg_report(report_path)
    assert report.mean_iou == 1.0
    assert report.mean_f_score == 1.0
    out = capsys.readouterr().out
    assert "mean" in out and "1.0000" in out


def test_layout_eval_mismatched_pages_is_input_error(corpus, tmp_path):
    maps = classes_dir(corpus, tmp_path)
    other = tmp_path / "other"
    other.mkdir()
    (other / "different.png").write_bytes((maps / next(iter(p.name for p in maps.glob('*.png')))).read_bytes())
    assert main(["layout-eval", str(maps), str(other)]) == 2


def test_ocr_then_eval_perfect_scores(corpus, tmp_path, capsys):
    # the corpus dir holds both rasters and class maps; point ocr at rasters only
    images = tmp_path / "images"
    images.mkdir()
    for p in corpus.glob("synth-*.png"):
        if ".classes" not in p.name:
            (images / p.name).write_bytes(p.read_bytes())
    maps = classes_dir(corpus, tmp_path)
    layouts = tmp_path / "layouts"
    assert main(["postprocess", str(maps), str(layouts)]) == 0
    texts = tmp_path / "texts"
    assert main(["ocr", str(images), str(texts), "--layouts", str(layouts),
                 "--atlas-dir", str(corpus), "--concurrency", "2"]) == 0
    pagetexts = sorted(texts.glob("*.pagetext.json"))
    assert len(pagetexts) == 3
    page = dataio.load_pagetext(pagetexts[0])
    assert page.engine_calls == 2
    assert page.statuses == ("ok", "ok")

    report_path = tmp_path / "ocr.json"
    assert main(["ocr-eval", str(texts), str(corpus), "-o", str(report_path)]) == 0
    report = dataio.load_ocr_report(report_path)
    assert report.mean_edit_distance == 0.0
    assert report.mean_word_recall == 1.0
    assert report.mean_roa == 1.0


def test_ocr_baseline_uses_one_call_per_page(corpus, tmp_path):
    images = tmp_path / "images"
    images.mkdir()
    for p in corpus.glob("synth-*.png"):
        if ".classes" not in p.name:
            (images / p.name).write_bytes(p.read_bytes())
    texts = tmp_path / "texts"
    assert main(["ocr", str(images), str(texts), "--baseline",
                 "--atlas-dir", str(corpus)]) == 0
    for path in texts.glob("*.pagetext.json"):
        assert dataio.load_pagetext(path).engine_calls == 1


def test_ocr_missing_layout_fails_page(corpus, tmp_path):
    images = tmp_path / "images"
    images.mkdir()
    for p in corpus.glob("synth-*.png"):
        if ".classes" not in p.name:
            (images / p.name).write_bytes(p.read_bytes())
    texts = tmp_path / "texts"
    empty = tmp_path / "empty-layouts"
    empty.mkdir()
    assert main(["ocr", str(images), str(texts), "--layouts", str(empty),
                 "--atlas-dir", str(corpus)]) == 1


def test_ocr_requires_layouts_or_baseline(corpus, tmp_path):
    assert main(["ocr", str(corpus), str(tmp_path / "t")]) == 2


def test_ocr_eval_empty_gt_counts_as_page_failure(corpus, tmp_path):
    texts = tmp_path / "texts"
    texts.mkdir()
    from newslayout.engine import PageText

    dataio.save_pagetext(PageText("page", ("hello",), ("ok",), 1), texts / "page.pagetext.json")
    gt = tmp_path / "gt"
    gt.mkdir()
    (gt / "page.txt").write_text("")
    assert main(["ocr-eval", str(texts), str(gt)]) == 1


def test_stats_toy_counts(corpus, tmp_path, capsys):
    stats_path = tmp_path / "stats.json"
    splits = tmp_path / "splits.json"
    splits.write_text(json.dumps({"synth-0041": "test"}))
    assert main(["stats", str(corpus / "annotations.json"),
                 "--splits", str(splits), "-o", str(stats_path)]) == 0
    out = capsys.readouterr().out
    assert "article title" in out and "total" in out
    payload = json.loads(stats_path.read_text())
    assert payload["categories"]["article title"]["total"] == 6
    assert payload["categories"]["article title"]["test"] == 2
    assert payload["totals"]["total"] == 12


def test_stats_missing_file_is_input_error(tmp_path):
    assert main(["stats", str(tmp_path / "nope.json")]) == 2


def test_config_file_with_flag_override(corpus, tmp_path):
    maps = classes_dir(corpus, tmp_path)
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"method": "geometric", "workers": 2,
                               "geometric": {"min_area": 32}}))
    out = tmp_path / "out1"
    assert main(["postprocess", str(maps), str(out), "--config", str(cfg)]) == 0
    layout = dataio.load_layout(next(iter(sorted(out.glob("*.layout.json")))))
    assert all(len(b.members) == 1 for b in layout.boxes)  # no merging in geometric mode
    # flag overrides the config's method
    out2 = tmp_path / "out2"
    assert main(["postprocess", str(maps), str(out2), "--config", str(cfg),
                 "--method", "geometric+heuristic"]) == 0
    layout2 = dataio.load_layout(next(iter(sorted(out2.glob("*.layout.json")))))
    assert any(len(b.members) == 2 for b in layout2.boxes)


def test_bad_config_is_config_error(corpus, tmp_path):
    maps = classes_dir(corpus, tmp_path)
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"method": "magic"}))
    assert main(["postprocess", str(maps), str(tmp_path / "o"), "--config", str(cfg)]) == 2


def test_reports_are_reproducible(corpus, tmp_path):
    maps = classes_dir(corpus, tmp_path)
    r1, r2 = tmp_path / "r1.json", tmp_path / "r2.json"
    assert main(["layout-eval", str(maps), str(maps), "-o", str(r1)]) == 0
    assert main(["layout-eval", str(maps), str(maps), "-o", str(r2)]) == 0
    assert r1.read_bytes() == r2.read_bytes()
