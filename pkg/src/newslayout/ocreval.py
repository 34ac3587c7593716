"""End-to-end OCR scoring: segment matching, edit distance, read order, recall.

Predicted segment texts are located in the ground truth by scanning every
contiguous token window of the segment's length and keeping the one with the
most positional exact matches; segments claim windows one-to-one, best score
first.  Read-order accuracy is 1 - m/n where m is the smallest number of
matched blocks whose removal leaves the remaining window starts increasing.
"""

from __future__ import annotations

import re
import unicodedata
from bisect import bisect_left, insort
from collections import Counter
from dataclasses import dataclass

import numpy as np

TokenSeq = list[str]

_WS_RUN = re.compile(r"\s+")


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def tokenize(text: str) -> TokenSeq:
    """Whitespace-split, strip surrounding punctuation, casefold, drop empties.

    Interior punctuation (hyphenated words, apostrophes) is preserved.
    """
    tokens = []
    for raw in text.split():
        start, end = 0, len(raw)
        while start < end and _is_punct(raw[start]):
            start += 1
        while end > start and _is_punct(raw[end - 1]):
            end -= 1
        token = raw[start:end].casefold()
        if token:
            tokens.append(token)
    return tokens


@dataclass(frozen=True)
class SegmentMatch:
    """Where one predicted segment landed in the ground-truth token stream."""

    segment_id: int
    interval: tuple[int, int] | None  # [start, end) token indices
    score: int  # positionally matched words within the interval

    @property
    def matched(self) -> bool:
        return self.interval is not None


def _window_score(pred: TokenSeq, gt: TokenSeq, start: int) -> int:
    return sum(1 for p, g in zip(pred, gt[start : start + len(pred)]) if p == g)


def match_interval(pred: TokenSeq, gt: TokenSeq, blocked=()) -> SegmentMatch:
    """Best unblocked ground-truth window of length ``len(pred)``.

    Ties break toward the earliest start.  Returns an unmatched result when
    the ground truth is shorter than the segment or every window intersects a
    blocked interval.
    """
    if not pred:
        raise ValueError("cannot match an empty token sequence")
    length = len(pred)
    best_start, best_score = None, -1
    for start in range(len(gt) - length + 1):
        end = start + length
        if any(start < b_end and b_start < end for b_start, b_end in blocked):
            continue
        score = _window_score(pred, gt, start)
        if score > best_score:
            best_start, best_score = start, score
    if best_start is None:
        return SegmentMatch(0, None, 0)
    return SegmentMatch(0, (best_start, best_start + length), best_score)


def map_segments(pred_segments: list[TokenSeq], gt: TokenSeq) -> list[SegmentMatch]:
    """One-to-one greedy assignment of segments to ground-truth windows.

    Repeatedly matches every unassigned segment against the still-free
    windows and commits the highest-scoring one (ties: earliest segment),
    blocking its interval.  Segments that never fit (or are empty) come back
    unmatched.  Results are listed in the original segment order.
    """
    results: dict[int, SegmentMatch] = {}
    blocked: list[tuple[int, int]] = []
    remaining = [i for i, seg in enumerate(pred_segments) if seg]
    for i in range(len(pred_segments)):
        if not pred_segments[i]:
            results[i] = SegmentMatch(i, None, 0)

    while remaining:
        best_i, best = None, None
        for i in remaining:
            match = match_interval(pred_segments[i], gt, blocked)
            if not match.matched:
                continue
            if best is None or match.score > best.score:
                best_i, best = i, match
        if best is None:  # nothing fits anymore
            for i in remaining:
                results[i] = SegmentMatch(i, None, 0)
            break
        results[best_i] = SegmentMatch(best_i, best.interval, best.score)
        insort(blocked, best.interval)
        remaining.remove(best_i)

    return [results[i] for i in range(len(pred_segments))]


def _normalize_chars(text: str) -> str:
    return _WS_RUN.sub(" ", unicodedata.normalize("NFC", text).casefold()).strip()


def _levenshtein(a, b) -> int:
    """Insert/delete/substitute distance between two sequences."""
    if len(a) == 0 or len(b) == 0:
        return len(a) + len(b)
    codes = {v: i for i, v in enumerate(dict.fromkeys(list(a) + list(b)))}
    xs = np.array([codes[v] for v in a])
    ys = np.array([codes[v] for v in b])
    offsets = np.arange(len(ys) + 1)
    row = offsets.copy()
    for i, x in enumerate(xs, start=1):
        prev = row
        row = np.empty_like(prev)
        row[0] = i
        row[1:] = np.minimum(prev[:-1] + (ys != x), prev[1:] + 1)
        # fold in insertions: row[j] = min over k<=j of row[k] + (j-k)
        row = np.minimum.accumulate(row - offsets) + offsets
    return int(row[-1])


def edit_distance_norm(pred: str, gt: str, level: str = "char") -> float:
    """Levenshtein distance over normalized text, divided by the longer length.

    ``level`` selects character sequences (casefolded, whitespace runs
    collapsed) or word tokens.  Two empty inputs score 0.
    """
    if level == "char":
        a, b = _normalize_chars(pred), _normalize_chars(gt)
    elif level == "word":
        a, b = tokenize(pred), tokenize(gt)
    else:
        raise ValueError(f"level must be 'char' or 'word', got {level!r}")
    longest = max(len(a), len(b))
    if longest == 0:
        return 0.0
    return _levenshtein(a, b) / longest


def _lis_length(values: list[int]) -> int:
    tails: list[int] = []
    for v in values:
        i = bisect_left(tails, v)
        if i == len(tails):
            tails.append(v)
        else:
            tails[i] = v
    return len(tails)


def read_order_accuracy(matches: list[SegmentMatch]) -> tuple[float, int, int]:
    """(roa, m, n) over the matched segments, taken in predicted order.

    m counts the blocks out of order: those not on the longest strictly
    increasing run of window start positions.  Undefined (raises) when no
    segment matched.
    """
    starts = [m.interval[0] for m in matches if m.matched]
    n = len(starts)
    if n == 0:
        raise ValueError("read order is undefined without matched segments")
    m = n - _lis_length(starts)
    return 1.0 - m / n, m, n


def word_recall(pred: TokenSeq, gt: TokenSeq) -> float:
    """Fraction of ground-truth tokens reproduced, counts clipped per word."""
    if not gt:
        raise ValueError("word recall is undefined for empty ground truth")
    if not pred:
        return 0.0
    pred_counts = Counter(pred)
    gt_counts = Counter(gt)
    hit = sum(min(pred_counts[w], c) for w, c in gt_counts.items())
    return hit / len(gt)


@dataclass(frozen=True)
class OcrReport:
    """Page-level OCR scores; ``roa`` is None when no segment matched."""

    page_id: str
    edit_distance: float
    word_recall: float
    roa: float | None
    out_of_order: int  # m
    total_blocks: int  # n, matched segments
    matches: tuple[SegmentMatch, ...]


def evaluate_ocr(
    pred_texts: list[str],
    gt_text: str,
    page_id: str = "",
    edit_level: str = "char",
) -> OcrReport:
    """Score one page: predicted block texts in read order vs plain text truth."""
    gt_tokens = tokenize(gt_text)
    if not gt_tokens:
        raise ValueError(f"ground truth for page {page_id!r} has no tokens")
    pred_token_seqs = [tokenize(t) for t in pred_texts]
    matches = map_segments(pred_token_seqs, gt_tokens)
    if any(m.matched for m in matches):
        roa, m, n = read_order_accuracy(matches)
    else:
        roa, m, n = None, 0, 0
    all_pred_tokens = [t for seq in pred_token_seqs for t in seq]
    return OcrReport(
        page_id=page_id,
        edit_distance=edit_distance_norm(" ".join(pred_texts), gt_text, level=edit_level),
        word_recall=word_recall(all_pred_tokens, gt_tokens),
        roa=roa,
        out_of_order=m,
        total_blocks=n,
        matches=tuple(matches),
    )


@dataclass(frozen=True)
class CorpusOcrReport:
    """Uniform per-page averages; pages with undefined read order are skipped
    in the read-order mean only."""

    pages: tuple[OcrReport, ...]
    mean_edit_distance: float
    mean_word_recall: float
    mean_roa: float | None


def evaluate_ocr_corpus(reports: list[OcrReport]) -> CorpusOcrReport:
    if not reports:
        raise ValueError("no page reports to aggregate")
    roas = [r.roa for r in reports if r.roa is not None]
    return CorpusOcrReport(
        pages=tuple(reports),
        mean_edit_distance=sum(r.edit_distance for r in reports) / len(reports),
        mean_word_recall=sum(r.word_recall for r in reports) / len(reports),
        mean_roa=sum(roas) / len(roas) if roas else None,
    )
