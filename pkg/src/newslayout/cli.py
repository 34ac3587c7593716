"""Batch command-line front end.

Subcommands wire the full pipeline: postprocess (maps -> ordered layouts),
ocr (layouts + images -> page text), layout-eval / ocr-eval (reports), stats
(annotation counts) and synth (synthetic corpus).  Configuration comes from
an optional JSON file; command-line flags win over it.

Exit codes: 0 success, 1 some pages failed, 2 invalid input or configuration.
"""

from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

from PIL import Image, ImageDraw

from . import dataio
from .dataio import DataFormatError
from .engine import EngineError, OcrEngineSpec, run_page_ocr
from .geometric import GeometricParams, geometric_pipeline, mask_to_segments
from .heuristic import HeuristicParams, heuristic_pipeline, order_reading
from .maskops import scale_boxes, separators_to_blocks
from .model import BBox, LayoutClass, OrderedLayout, Segment, SuperBox
from .ocreval import evaluate_ocr, evaluate_ocr_corpus
from .segmetrics import evaluate_layout
from .synth import SynthSpec, synth_page

log = logging.getLogger("newslayout")

METHODS = ("geometric", "heuristic", "geometric+heuristic", "separators")


@dataclass(frozen=True)
class PipelineConfig:
    method: str = "geometric+heuristic"
    geometric: GeometricParams = GeometricParams()
    heuristic: HeuristicParams = HeuristicParams()
    engine: OcrEngineSpec | None = None
    page_dims: tuple[int, int] | None = None  # None: maps already at page scale
    workers: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


def load_config(path) -> PipelineConfig:
    raw = dataio.load_json(path)
    try:
        cfg = PipelineConfig(
            method=raw.get("method", "geometric+heuristic"),
            geometric=GeometricParams(**raw.get("geometric", {})),
            heuristic=HeuristicParams(**raw.get("heuristic", {})),
            page_dims=tuple(raw["page_dims"]) if "page_dims" in raw else None,
            workers=int(raw.get("workers", 1)),
            seed=int(raw.get("seed", 0)),
        )
    except (TypeError, ValueError) as exc:
        raise DataFormatError(f"{path}: bad configuration: {exc}") from exc
    return cfg


def _parse_page_size(text: str) -> tuple[int, int]:
    try:
        w, h = text.lower().split("x")
        return int(w), int(h)
    except ValueError:
        raise DataFormatError(f"--page-size wants WIDTHxHEIGHT, got {text!r}") from None


def _config_from_args(args) -> PipelineConfig:
    cfg = load_config(args.config) if args.config else PipelineConfig()
    updates = {}
    if getattr(args, "method", None):
        updates["method"] = args.method
    if getattr(args, "workers", None):
        updates["workers"] = args.workers
    if getattr(args, "seed", None) is not None:
        updates["seed"] = args.seed
    if getattr(args, "page_size", None):
        updates["page_dims"] = _parse_page_size(args.page_size)
    return replace(cfg, **updates) if updates else cfg


# --------------------------------------------------------------------------
# postprocess


def _load_input_map(path: Path):
    if path.suffix == ".lpm":
        return dataio.load_probmap(path)
    return dataio.load_classmap(path)


def _singleton_superboxes(segments) -> list[SuperBox]:
    return [SuperBox(s.bbox, (s,), i) for i, s in enumerate(segments)]


def _layout_for_page(path: Path, cfg: PipelineConfig) -> OrderedLayout:
    if cfg.method == "separators":
        sep = dataio.load_mask(path)
        map_h, map_w = sep.shape
        page_dims = cfg.page_dims or (map_w, map_h)
        blocks = separators_to_blocks(sep, min_area=cfg.geometric.min_area)
        blocks = scale_boxes(blocks, (map_w, map_h), page_dims)
        segments = [Segment(b, LayoutClass.other) for b in blocks]
    else:
        input_map = _load_input_map(path)
        map_h, map_w = input_map.shape[:2]
        page_dims = cfg.page_dims or (map_w, map_h)
        if cfg.method == "heuristic":
            segments = mask_to_segments(input_map, page_dims, cfg.geometric)
        else:
            segments = geometric_pipeline(input_map, page_dims, cfg.geometric)
    if not segments:
        raise ValueError("no segments survived post-processing")
    if cfg.method in ("heuristic", "geometric+heuristic"):
        return heuristic_pipeline(segments, page_dims, cfg.heuristic)
    return order_reading(_singleton_superboxes(segments), page_dims, cfg.heuristic)


def _draw_overlay(layout: OrderedLayout, path: Path) -> None:
    img = Image.new("RGB", (layout.page_width, layout.page_height), (255, 255, 255))
    draw = ImageDraw.Draw(img)
    for box in layout.boxes:
        for seg in box.members:
            b = seg.bbox
            draw.rectangle([b.x_min, b.y_min, b.x_max - 1, b.y_max - 1],
                           outline=dataio.CLASS_COLORS[seg.cls], width=3)
        b = box.bbox
        draw.rectangle([b.x_min, b.y_min, b.x_max - 1, b.y_max - 1],
                       outline=(0, 0, 0), width=1)
        draw.text((b.x_min + 4, b.y_min + 4), str(box.order_index), fill=(0, 0, 0))
    img.save(path)


def _run_pages(pages, worker, workers: int) -> list[tuple[str, str]]:
    """Run worker(page) for every page; returns (page_id, error) failures."""

    def guarded(page):
        page_id = page.stem if isinstance(page, Path) else str(page)
        try:
            worker(page)
            return None
        except Exception as exc:  # noqa: BLE001 - page isolation
            log.error("page %s failed: %s", page_id, exc)
            return (page_id, str(exc))

    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(guarded, pages))
    return [r for r in results if r is not None]


def cmd_postprocess(args) -> int:
    cfg = _config_from_args(args)
    in_dir, out_dir = Path(args.input_dir), Path(args.output_dir)
    pages = sorted(p for p in in_dir.iterdir() if p.suffix in (".png", ".lpm"))
    if not pages:
        raise DataFormatError(f"no .png or .lpm inputs under {in_dir}")
    out_dir.mkdir(parents=True, exist_ok=True)

    def work(path: Path) -> None:
        layout = _layout_for_page(path, cfg)
        dataio.save_layout(layout, out_dir / f"{path.stem}.layout.json")
        if args.overlay:
            _draw_overlay(layout, out_dir / f"{path.stem}.overlay.png")

    failures = _run_pages(pages, work, cfg.workers)
    done = len(pages) - len(failures)
    log.info("postprocess (%s): %d/%d pages written to %s", cfg.method, done, len(pages), out_dir)
    if failures:
        log.warning("failed pages: %s", ", ".join(p for p, _ in failures))
    return 1 if failures else 0


# --------------------------------------------------------------------------
# evaluation commands


def cmd_layout_eval(args) -> int:
    pred_dir, gt_dir = Path(args.pred_dir), Path(args.gt_dir)
    pred = {p.stem: dataio.load_classmap(p) for p in sorted(pred_dir.glob("*.png"))}
    gt = {p.stem: dataio.load_classmap(p) for p in sorted(gt_dir.glob("*.png"))}
    report = evaluate_layout(pred, gt)

    print(f"{'class':<16}{'IoU':>8}{'Acc':>8}{'Pr':>8}{'Re':>8}{'F':>8}")
    for cls, m in report.per_class.items():
        name = cls.category_name if cls != LayoutClass.background else "background"
        if m is None:
            print(f"{name:<16}{'-':>8}{'-':>8}{'-':>8}{'-':>8}{'-':>8}")
        else:
            print(f"{name:<16}{m.iou:>8.4f}{m.accuracy:>8.4f}{m.precision:>8.4f}"
                  f"{m.recall:>8.4f}{m.f_score:>8.4f}")
    print(f"{'mean':<16}{report.mean_iou:>8.4f}{report.mean_accuracy:>8.4f}"
          f"{report.mean_precision:>8.4f}{report.mean_recall:>8.4f}{report.mean_f_score:>8.4f}")
    if args.output:
        dataio.save_seg_report(report, args.output)
    return 0


def _engine_from_args(args, atlas_path: Path | None) -> OcrEngineSpec:
    if args.engine == "external-command":
        return OcrEngineSpec(kind="external-command", command=args.engine_command,
                             lang=args.lang, timeout=args.timeout,
                             max_concurrency=args.concurrency, retries=args.retries)
    if atlas_path is None:
        raise DataFormatError("mock-atlas engine needs --atlas-dir with one atlas per page")
    return OcrEngineSpec(kind="mock-atlas", atlas=dataio.load_atlas(atlas_path),
                         timeout=args.timeout, max_concurrency=args.concurrency,
                         retries=args.retries)


def _baseline_layout(width: int, height: int) -> OrderedLayout:
    seg = Segment(BBox(0, 0, width, height), LayoutClass.other)
    return OrderedLayout(width, height, (SuperBox(seg.bbox, (seg,), 0),))


def cmd_ocr(args) -> int:
    image_dir, out_dir = Path(args.image_dir), Path(args.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    images = sorted(image_dir.glob("*.png"))
    if not images:
        raise DataFormatError(f"no .png images under {image_dir}")
    if not args.baseline and not args.layouts:
        raise DataFormatError("either --layouts or --baseline is required")

    def work(path: Path) -> None:
        image = dataio.load_image(path)
        if args.baseline:
            layout = _baseline_layout(image.shape[1], image.shape[0])
        else:
            layout_path = Path(args.layouts) / f"{path.stem}.layout.json"
            if not layout_path.exists():
                raise FileNotFoundError(f"missing layout {layout_path}")
            layout = dataio.load_layout(layout_path)
        atlas_path = Path(args.atlas_dir) / f"{path.stem}.atlas.json" if args.atlas_dir else None
        spec = _engine_from_args(args, atlas_path)
        page = run_page_ocr(image, layout, spec, page_id=path.stem)
        dataio.save_pagetext(page, out_dir / f"{path.stem}.pagetext.json")

    failures = _run_pages(images, work, args.workers or 1)
    log.info("ocr: %d/%d pages written to %s", len(images) - len(failures), len(images), out_dir)
    return 1 if failures else 0


def cmd_ocr_eval(args) -> int:
    pred_dir, gt_dir = Path(args.pred_dir), Path(args.gt_dir)
    preds = sorted(pred_dir.glob("*.pagetext.json"))
    if not preds:
        raise DataFormatError(f"no .pagetext.json files under {pred_dir}")
    reports, failures = [], []
    for path in preds:
        stem = path.name.removesuffix(".pagetext.json")
        try:
            page = dataio.load_pagetext(path)
            gt_path = gt_dir / f"{stem}.txt"
            gt_text = gt_path.read_text(encoding="utf-8")
            reports.append(evaluate_ocr(list(page.texts), gt_text, page_id=stem,
                                        edit_level=args.edit_level))
        except (OSError, ValueError) as exc:
            log.error("page %s failed: %s", stem, exc)
            failures.append((stem, str(exc)))

    if reports:
        corpus = evaluate_ocr_corpus(reports)
        print(f"{'page':<16}{'edit':>8}{'order':>8}{'recall':>8}")
        for r in corpus.pages:
            roa = f"{r.roa:.4f}" if r.roa is not None else "-"
            print(f"{r.page_id:<16}{r.edit_distance:>8.4f}{roa:>8}{r.word_recall:>8.4f}")
        mean_roa = f"{corpus.mean_roa:.4f}" if corpus.mean_roa is not None else "-"
        print(f"{'mean':<16}{corpus.mean_edit_distance:>8.4f}{mean_roa:>8}"
              f"{corpus.mean_word_recall:>8.4f}")
        if args.output:
            dataio.save_ocr_report(corpus, args.output)
    return 1 if failures else 0


def cmd_stats(args) -> int:
    ann = dataio.load_annotations(args.annotations)
    splits = None
    if args.splits:
        splits = dataio.load_json(args.splits)
    stats = dataio.summarize_dataset(ann, splits)
    print(f"{'category':<16}{'train':>10}{'test':>10}{'total':>10}")
    for name, c in stats.categories.items():
        print(f"{name:<16}{c.train:>10,}{c.test:>10,}{c.total:>10,}")
    t = stats.totals
    print(f"{'total':<16}{t.train:>10,}{t.test:>10,}{t.total:>10,}")
    if args.output:
        dataio.save_stats(stats, args.output)
    return 0


def cmd_synth(args) -> int:
    raw = dataio.load_json(args.spec) if args.spec else {}
    page_count = int(raw.pop("pages", 1))
    try:
        spec = SynthSpec(**raw)
    except (TypeError, ValueError) as exc:
        raise DataFormatError(f"bad synthetic page spec: {exc}") from exc
    out_dir = Path(args.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    seed = args.seed if args.seed is not None else 0

    pages = []
    for i in range(page_count):
        page = synth_page(spec, seed=seed + i)
        pid = page.annotation.page_id
        dataio.save_image(page.image, out_dir / f"{pid}.png")
        dataio.save_classmap(dataio.rasterize_annotations(page.annotation),
                             out_dir / f"{pid}.classes.png")
        dataio.save_atlas(page.atlas, out_dir / f"{pid}.atlas.json")
        (out_dir / f"{pid}.txt").write_text(page.gt_text, encoding="utf-8")
        pages.append(page.annotation)
    ann = dataio.AnnotationFile(tuple(pages), {name: int(LayoutClass.from_category_name(name))
                                               for name in dataio.CATEGORY_NAMES})
    dataio.save_annotations(ann, out_dir / "annotations.json")
    log.info("synth: wrote %d page(s) to %s", page_count, out_dir)
    return 0


# --------------------------------------------------------------------------
# parser


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="newslayout",
        description="Layout post-processing, OCR dispatch and evaluation for page images.",
    )
    parser.add_argument("--verbose", "-v", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file; flags override it")
        p.add_argument("--workers", type=int, default=None, help="parallel page workers")
        p.add_argument("--seed", type=int, default=None, help="random seed")

    p = sub.add_parser("postprocess", help="segmentation maps -> ordered layout files")
    p.add_argument("input_dir", help="directory of class maps (.png) or probability maps (.lpm)")
    p.add_argument("output_dir")
    p.add_argument("--method", choices=METHODS, default=None)
    p.add_argument("--page-size", help="original page WIDTHxHEIGHT to scale boxes to")
    p.add_argument("--overlay", action="store_true", help="also write box overlay rasters")
    common(p)
    p.set_defaults(func=cmd_postprocess)

    p = sub.add_parser("layout-eval", help="pixel metrics of predicted vs ground-truth class maps")
    p.add_argument("pred_dir")
    p.add_argument("gt_dir")
    p.add_argument("--output", "-o", help="write the report JSON here")
    common(p)
    p.set_defaults(func=cmd_layout_eval)

    p = sub.add_parser("ocr", help="run the OCR engine over layout blocks")
    p.add_argument("image_dir")
    p.add_argument("output_dir")
    p.add_argument("--layouts", help="directory of .layout.json files")
    p.add_argument("--baseline", action="store_true",
                   help="ignore layouts; one full-page block per page")
    p.add_argument("--engine", choices=("mock-atlas", "external-command"), default="mock-atlas")
    p.add_argument("--engine-command", help="template with {input} (and optional {lang})")
    p.add_argument("--atlas-dir", help="directory of per-page .atlas.json files")
    p.add_argument("--lang", default=None)
    p.add_argument("--timeout", type=float, default=30.0)
    p.add_argument("--retries", type=int, default=1)
    p.add_argument("--concurrency", type=int, default=1)
    common(p)
    p.set_defaults(func=cmd_ocr)

    p = sub.add_parser("ocr-eval", help="score page texts against plain-text ground truth")
    p.add_argument("pred_dir", help="directory of .pagetext.json files")
    p.add_argument("gt_dir", help="directory of per-page .txt ground truth")
    p.add_argument("--output", "-o", help="write the report JSON here")
    p.add_argument("--edit-level", choices=("char", "word"), default="char")
    common(p)
    p.set_defaults(func=cmd_ocr_eval)

    p = sub.add_parser("stats", help="instance counts per category and split")
    p.add_argument("annotations")
    p.add_argument("--splits", help="JSON mapping page id -> train|test")
    p.add_argument("--output", "-o", help="write the stats JSON here")
    common(p)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("synth", help="generate a synthetic page corpus")
    p.add_argument("output_dir")
    p.add_argument("--spec", help="JSON with page grid fields and optional 'pages' count")
    common(p)
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (DataFormatError, FileNotFoundError, NotADirectoryError, ValueError) as exc:
        log.error("%s", exc)
        return 2
    except EngineError as exc:
        log.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
