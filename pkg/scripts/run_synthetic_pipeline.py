#!/usr/bin/env python3
"""Desk-scale experiment on synthetic pages.

Builds a small synthetic corpus, degrades the ground-truth class maps to
imitate imperfect segmentation output, then compares post-processing methods
end to end (mock OCR engine) the same way a model comparison would:

    python scripts/run_synthetic_pipeline.py --pages 8 --seed 7

Prints a per-method table of edit distance, read-order accuracy and word
recall, plus the pixel metrics of the degraded maps themselves.
"""

import argparse
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from newslayout.dataio import rasterize_annotations
from newslayout.engine import OcrEngineSpec, run_page_ocr
from newslayout.geometric import GeometricParams, geometric_pipeline, mask_to_segments
from newslayout.heuristic import heuristic_pipeline, order_reading
from newslayout.model import BBox, LayoutClass, OrderedLayout, Segment, SuperBox
from newslayout.ocreval import evaluate_ocr, evaluate_ocr_corpus
from newslayout.segmetrics import evaluate_layout
from newslayout.synth import SynthSpec, synth_page

MAP_SCALE = 2  # maps are consumed at 1/2 page resolution, like a 512x512 model


def degrade_classmap(cmap: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Speckle noise plus eroded block borders, imitating model output."""
    noisy = cmap.copy()
    h, w = noisy.shape
    # flip a sprinkling of pixels to random classes
    flips = rng.random((h, w)) < 0.002
    noisy[flips] = rng.integers(0, 8, size=int(flips.sum()))
    # eat 1-2 pixels off block borders so upscaled boxes leave gaps
    interior = noisy.copy()
    edge = np.zeros((h, w), dtype=bool)
    body = noisy != 0
    edge[1:, :] |= body[1:, :] & ~body[:-1, :]
    edge[:-1, :] |= body[:-1, :] & ~body[1:, :]
    edge[:, 1:] |= body[:, 1:] & ~body[:, :-1]
    edge[:, :-1] |= body[:, :-1] & ~body[:, 1:]
    interior[edge & (rng.random((h, w)) < 0.7)] = 0
    return interior


def baseline_layout(width: int, height: int) -> OrderedLayout:
    seg = Segment(BBox(0, 0, width, height), LayoutClass.other)
    return OrderedLayout(width, height, (SuperBox(seg.bbox, (seg,), 0),))


def layouts_for_method(method: str, cmap, page_dims, params: GeometricParams):
    if method == "geometric":
        segments = geometric_pipeline(cmap, page_dims, params)
        boxes = [SuperBox(s.bbox, (s,), i) for i, s in enumerate(segments)]
        return order_reading(boxes, page_dims)
    if method == "heuristic":
        return heuristic_pipeline(mask_to_segments(cmap, page_dims, params), page_dims)
    if method == "geometric+heuristic":
        return heuristic_pipeline(geometric_pipeline(cmap, page_dims, params), page_dims)
    raise ValueError(method)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--pages", type=int, default=6)
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--columns", type=int, default=3)
    parser.add_argument("--blocks", type=int, default=3, help="blocks per column")
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    spec = SynthSpec(columns=args.columns, blocks_per_column=args.blocks)
    params = GeometricParams(min_area=48)

    pages = [synth_page(spec, seed=args.seed + i) for i in range(args.pages)]
    clean_maps, noisy_maps = {}, {}
    for page in pages:
        dims = (page.annotation.page_width // MAP_SCALE,
                page.annotation.page_height // MAP_SCALE)
        clean = rasterize_annotations(page.annotation, dims=dims)
        clean_maps[page.annotation.page_id] = clean
        noisy_maps[page.annotation.page_id] = degrade_classmap(clean, rng)

    seg_report = evaluate_layout(noisy_maps, clean_maps)
    print(f"degraded maps vs ground truth over {args.pages} page(s): "
          f"mIoU={seg_report.mean_iou:.4f}  mPr={seg_report.mean_precision:.4f}  "
          f"mRe={seg_report.mean_recall:.4f}")
    print()
    print(f"{'method':<24}{'edit':>8}{'order':>8}{'recall':>8}{'calls':>8}")

    methods = ["baseline", "geometric", "heuristic", "geometric+heuristic"]
    for method in methods:
        reports, calls = [], 0
        for page in pages:
            width, height = page.annotation.page_width, page.annotation.page_height
            if method == "baseline":
                layout = baseline_layout(width, height)
            else:
                layout = layouts_for_method(method, noisy_maps[page.annotation.page_id],
                                            (width, height), params)
            engine = OcrEngineSpec(kind="mock-atlas", atlas=page.atlas, max_concurrency=4)
            text = run_page_ocr(page.image, layout, engine,
                                page_id=page.annotation.page_id)
            calls += text.engine_calls
            reports.append(evaluate_ocr(list(text.texts), page.gt_text,
                                        page_id=page.annotation.page_id))
        corpus = evaluate_ocr_corpus(reports)
        order = f"{corpus.mean_roa:.4f}" if corpus.mean_roa is not None else "-"
        print(f"{method:<24}{corpus.mean_edit_distance:>8.4f}{order:>8}"
              f"{corpus.mean_word_recall:>8.4f}{calls:>8}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
