"""Deterministic synthetic pages for end-to-end verification.

A synthetic page is a column grid of text blocks: a grayscale raster (blocks
painted as light panels with dark text-line stripes, so the painted region
equals the annotation box exactly), the matching annotation, the ground-truth
text in read order, and a mock atlas mapping each block rectangle to its
text.  The same seed always yields byte-identical outputs.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

import numpy as np

from .model import AtlasRegion, BBox, LayoutClass, MockAtlas, PageAnnotation, Segment

_LEXICON = (
    "the a of and to in for on with by from at as is was were has had been "
    "city county state local daily weekly morning evening edition press news "
    "report notice public meeting council court school church market street "
    "river bridge railway station farm harvest winter spring summer autumn "
    "price sale goods store letter office member family years early late"
).split()

_PANEL_SHADE = 230
_INK_SHADE = 40


@dataclass(frozen=True)
class SynthSpec:
    """Column/block grid description of a synthetic page."""

    page_width: int = 1024
    page_height: int = 1536
    columns: int = 2
    blocks_per_column: int = 2
    margin: int = 48
    gutter: int = 24
    block_gap: int = 32
    title_words: int = 4
    body_words: int = 40

    def __post_init__(self):
        if self.page_width <= 0 or self.page_height <= 0:
            raise ValueError("page dimensions must be positive")
        if self.columns < 1 or self.blocks_per_column < 1:
            raise ValueError("need at least one column and one block per column")
        if min(self.margin, self.gutter, self.block_gap) < 0:
            raise ValueError("margin, gutter and block_gap must be >= 0")
        if min(self.title_words, self.body_words) < 1:
            raise ValueError("word counts must be >= 1")


@dataclass(frozen=True)
class SynthPage:
    image: np.ndarray  # grayscale uint8 (height, width)
    annotation: PageAnnotation
    gt_text: str
    atlas: MockAtlas


def _block_heights(usable: int, count: int, rng: random.Random) -> list[int]:
    weights = [1.0 + 0.3 * rng.random() for _ in range(count)]
    scale = usable / sum(weights)
    heights = [max(16, int(w * scale)) for w in weights]
    heights[-1] += usable - sum(heights)  # absorb rounding in the last block
    if min(heights) < 16:
        raise ValueError("page too small for the requested block grid")
    return heights


def _words(rng: random.Random, count: int) -> str:
    return " ".join(rng.choice(_LEXICON) for _ in range(count))


def _paint_block(canvas: np.ndarray, box: BBox) -> None:
    canvas[box.y_min:box.y_max, box.x_min:box.x_max] = _PANEL_SHADE
    # text-line stripes, inset so the panel shade still frames them
    y = box.y_min + 4
    while y + 6 <= box.y_max - 4:
        canvas[y:y + 6, box.x_min + 4:box.x_max - 4] = _INK_SHADE
        y += 10


def synth_page(spec: SynthSpec = SynthSpec(), seed: int = 0) -> SynthPage:
    """Render one page; deterministic for a given (spec, seed) pair.

    Blocks are generated in read order (down each column, columns left to
    right); the first block of every column is a short title, the rest are
    bodies.  Atlas regions equal the annotation boxes.
    """
    rng = random.Random(seed)
    col_width = (spec.page_width - 2 * spec.margin
                 - (spec.columns - 1) * spec.gutter) // spec.columns
    usable_height = (spec.page_height - 2 * spec.margin
                     - (spec.blocks_per_column - 1) * spec.block_gap)
    if col_width < 24 or usable_height < 16 * spec.blocks_per_column:
        raise ValueError("page too small for the requested block grid")

    canvas = np.full((spec.page_height, spec.page_width), 255, dtype=np.uint8)
    segments: list[Segment] = []
    regions: list[AtlasRegion] = []
    block_texts: list[str] = []

    for col in range(spec.columns):
        x0 = spec.margin + col * (col_width + spec.gutter)
        y = spec.margin
        heights = _block_heights(usable_height, spec.blocks_per_column, rng)
        for row, h in enumerate(heights):
            box = BBox(x0, y, x0 + col_width, y + h)
            cls = LayoutClass.article_title if row == 0 else LayoutClass.article_body
            text = _words(rng, spec.title_words if row == 0 else spec.body_words)
            for existing in segments:
                if existing.bbox.intersects(box):
                    raise ValueError(f"synthetic blocks overlap: {existing.bbox} vs {box}")
            _paint_block(canvas, box)
            segments.append(Segment(box, cls))
            regions.append(AtlasRegion(box, text))
            block_texts.append(text)
            y += h + spec.block_gap

    annotation = PageAnnotation(
        page_id=f"synth-{seed:04d}",
        page_width=spec.page_width,
        page_height=spec.page_height,
        segments=tuple(segments),
    )
    return SynthPage(canvas, annotation, "\n".join(block_texts), MockAtlas(tuple(regions)))
