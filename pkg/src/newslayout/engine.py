"""Crop ordered blocks and fetch their text from a pluggable OCR engine.

Engines are either an external command template (the crop is written to a
temporary image whose path replaces ``{input}``; the command prints UTF-8
text on stdout and exits 0) or a mock atlas that maps page rectangles to
known text.  Blocks are recognized concurrently up to a limit and always
reassembled in read order.
"""

from __future__ import annotations

import shlex
import subprocess
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .model import BBox, MockAtlas, OrderedLayout

ENGINE_KINDS = ("external-command", "mock-atlas")


class EngineError(RuntimeError):
    """The engine failed to produce text for a crop."""


class EngineTimeout(EngineError):
    """The engine exceeded its per-call time budget."""


@dataclass(frozen=True)
class OcrEngineSpec:
    """How to obtain text for a block crop."""

    kind: str = "mock-atlas"
    command: str | None = None  # template with {input} and optional {lang}
    atlas: MockAtlas | None = None
    lang: str | None = None
    timeout: float = 30.0
    max_concurrency: int = 1
    retries: int = 1  # extra attempts after a failure
    padding: int = 0  # pixels of page context added around each crop

    def __post_init__(self):
        if self.kind not in ENGINE_KINDS:
            raise ValueError(f"engine kind must be one of {ENGINE_KINDS}, got {self.kind!r}")
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")
        if self.max_concurrency < 1:
            raise ValueError("max_concurrency must be >= 1")
        if self.kind == "external-command" and not self.command:
            raise ValueError("external-command engine needs a command template")
        if self.kind == "mock-atlas" and self.atlas is None:
            raise ValueError("mock-atlas engine needs an atlas")


@dataclass(frozen=True)
class BlockCrop:
    """One super box's pixels, tagged with its page-coordinate rectangle."""

    bbox: BBox
    pixels: np.ndarray
    clamped: bool = False


@dataclass(frozen=True)
class PageText:
    """Per-block text for one page, in read order."""

    page_id: str
    texts: tuple[str, ...]
    statuses: tuple[str, ...]  # "ok" or "error: ..."
    engine_calls: int
    warnings: tuple[str, ...] = field(default_factory=tuple)

    @property
    def ok_count(self) -> int:
        return sum(1 for s in self.statuses if s == "ok")


def crop_blocks(image: np.ndarray, layout: OrderedLayout, padding: int = 0) -> list[BlockCrop]:
    """One crop per super box, in order_index order.

    Boxes sticking out of the image (snapping and scaling can push edges a
    few pixels past the border) are clamped; a box entirely outside raises.
    """
    if image.ndim not in (2, 3) or image.size == 0:
        raise ValueError("image must be a non-empty 2-D or 3-D array")
    height, width = image.shape[:2]
    crops = []
    for box in layout.boxes:
        wanted = box.bbox
        if padding:
            wanted = BBox(max(0, wanted.x_min - padding), max(0, wanted.y_min - padding),
                          wanted.x_max + padding, wanted.y_max + padding)
        clipped = wanted.clamp(width, height)  # raises when fully outside
        crops.append(BlockCrop(
            bbox=clipped,
            pixels=image[clipped.y_min : clipped.y_max, clipped.x_min : clipped.x_max].copy(),
            clamped=clipped != wanted,
        ))
    return crops


def _atlas_lookup(crop: BlockCrop, atlas: MockAtlas) -> str:
    """Text for the atlas regions this crop covers.

    Regions at least half inside the crop are returned top-to-bottom (a
    merged block covers several of them); failing that, the single region
    with maximal overlap wins; no overlap at all yields empty text.
    """
    overlaps = [(region, crop.bbox.intersection_area(region.bbox)) for region in atlas.regions]
    covered = [(r, a) for r, a in overlaps if a * 2 >= r.bbox.area and a > 0]
    if covered:
        covered.sort(key=lambda ra: (ra[0].bbox.y_min, ra[0].bbox.x_min))
        return "\n".join(r.text for r, _ in covered)
    best, best_area = None, 0
    for region, area in overlaps:
        if area > best_area:
            best, best_area = region, area
    return best.text if best is not None else ""


def _run_command(crop: BlockCrop, spec: OcrEngineSpec) -> str:
    with tempfile.TemporaryDirectory(prefix="newslayout-ocr-") as tmp:
        path = Path(tmp) / "crop.png"
        Image.fromarray(crop.pixels).save(path)
        cmd = [part.replace("{input}", str(path)).replace("{lang}", spec.lang or "")
               for part in shlex.split(spec.command)]
        attempts = spec.retries + 1
        last: EngineError | None = None
        for _ in range(attempts):
            try:
                proc = subprocess.run(cmd, capture_output=True, timeout=spec.timeout)
            except subprocess.TimeoutExpired:
                last = EngineTimeout(f"engine exceeded {spec.timeout}s for box {crop.bbox.as_tuple()}")
                continue
            if proc.returncode != 0:
                detail = proc.stderr.decode("utf-8", errors="replace").strip()
                last = EngineError(
                    f"engine exited {proc.returncode} for box {crop.bbox.as_tuple()}: {detail[-500:]}"
                )
                continue
            return proc.stdout.decode("utf-8", errors="replace").rstrip("\n")
        raise last


def recognize(crop: BlockCrop, spec: OcrEngineSpec) -> str:
    """Text for one crop via the configured engine."""
    if crop.pixels.size == 0:
        raise ValueError("cannot recognize an empty crop")
    if spec.kind == "mock-atlas":
        return _atlas_lookup(crop, spec.atlas)
    return _run_command(crop, spec)


def run_page_ocr(
    image: np.ndarray,
    layout: OrderedLayout,
    spec: OcrEngineSpec,
    page_id: str = "",
    recognize_fn=None,
) -> PageText:
    """Recognize every block of a page, preserving read order.

    Crops are dispatched with at most ``spec.max_concurrency`` in flight and
    results are keyed by block position, so completion order never reorders
    the output.  Per-block failures are recorded; only a page where every
    block failed raises.
    """
    crops = crop_blocks(image, layout, padding=spec.padding)
    rec = recognize_fn if recognize_fn is not None else (lambda c: recognize(c, spec))

    texts: list[str] = [""] * len(crops)
    statuses: list[str] = ["error: not dispatched"] * len(crops)

    def work(index: int) -> None:
        try:
            texts[index] = rec(crops[index])
            statuses[index] = "ok"
        except Exception as exc:  # noqa: BLE001 - per-block isolation
            statuses[index] = f"error: {exc}"

    with ThreadPoolExecutor(max_workers=spec.max_concurrency) as pool:
        list(pool.map(work, range(len(crops))))

    warnings = tuple(
        f"box {i} clamped to page bounds" for i, c in enumerate(crops) if c.clamped
    )
    page = PageText(page_id, tuple(texts), tuple(statuses), engine_calls=len(crops),
                    warnings=warnings)
    if crops and page.ok_count == 0:
        raise EngineError(f"all {len(crops)} blocks failed on page {page_id!r}: {statuses[0]}")
    return page
