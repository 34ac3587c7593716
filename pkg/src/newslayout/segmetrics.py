"""Pixel-wise layout segmentation metrics.

Each metric is computed per class from pixel confusion counts and then
averaged over the classes that actually occur (macro average); classes absent
from both prediction and ground truth are reported as undefined and excluded
from the means.  Across a corpus, confusion counts are summed per class
before any metric is computed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import ClassMap, LayoutClass, validate_classmap

ALL_CLASSES = tuple(LayoutClass)


@dataclass(frozen=True)
class PixelCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    @property
    def defined(self) -> bool:
        """A class is evaluable once any pixel involves it."""
        return self.tp + self.fp + self.fn > 0

    def __add__(self, other: "PixelCounts") -> "PixelCounts":
        return PixelCounts(self.tp + other.tp, self.fp + other.fp,
                           self.fn + other.fn, self.tn + other.tn)


@dataclass(frozen=True)
class ConfusionCounts:
    counts: dict[LayoutClass, PixelCounts]

    @property
    def classes(self) -> tuple[LayoutClass, ...]:
        return tuple(self.counts)

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        if self.classes != other.classes:
            raise ValueError("cannot sum confusion counts over different class lists")
        return ConfusionCounts({c: self.counts[c] + other.counts[c] for c in self.counts})


@dataclass(frozen=True)
class ClassMetrics:
    iou: float
    accuracy: float
    precision: float
    recall: float
    f_score: float


@dataclass(frozen=True)
class SegMetricsReport:
    """Per-class metrics plus their means over the evaluated classes.

    ``per_class`` holds None for undefined classes; the means are None only
    when no class was evaluable at all.
    """

    per_class: dict[LayoutClass, ClassMetrics | None]
    mean_iou: float | None
    mean_accuracy: float | None
    mean_precision: float | None
    mean_recall: float | None
    mean_f_score: float | None

    @property
    def evaluated_classes(self) -> tuple[LayoutClass, ...]:
        return tuple(c for c, m in self.per_class.items() if m is not None)


def confusion_matrix(pred: ClassMap, gt: ClassMap, classes=ALL_CLASSES) -> ConfusionCounts:
    """Per-class pixel confusion counts for one page."""
    validate_classmap(pred)
    validate_classmap(gt)
    if pred.shape != gt.shape:
        raise ValueError(f"prediction {pred.shape} and ground truth {gt.shape} differ in size")
    n = len(LayoutClass)
    joint = np.bincount(
        gt.ravel().astype(np.int64) * n + pred.ravel().astype(np.int64), minlength=n * n
    ).reshape(n, n)
    total = int(pred.size)
    counts = {}
    for cls in classes:
        c = int(cls)
        tp = int(joint[c, c])
        fp = int(joint[:, c].sum()) - tp
        fn = int(joint[c, :].sum()) - tp
        counts[cls] = PixelCounts(tp, fp, fn, total - tp - fp - fn)
    return ConfusionCounts(counts)


def _ratio(num: int, den: int) -> float:
    # inside a defined class, an empty denominator scores 0 rather than NaN
    return num / den if den else 0.0


def class_metrics(confusion: ConfusionCounts) -> SegMetricsReport:
    """Metrics per class, then macro means over the defined classes.

    iou = tp/(tp+fp+fn), precision = tp/(tp+fp), recall = tp/(tp+fn),
    accuracy = (tp+tn)/total, f = 2pr/(p+r).
    """
    per_class: dict[LayoutClass, ClassMetrics | None] = {}
    for cls, c in confusion.counts.items():
        if not c.defined:
            per_class[cls] = None
            continue
        precision = _ratio(c.tp, c.tp + c.fp)
        recall = _ratio(c.tp, c.tp + c.fn)
        per_class[cls] = ClassMetrics(
            iou=_ratio(c.tp, c.tp + c.fp + c.fn),
            accuracy=_ratio(c.tp + c.tn, c.total),
            precision=precision,
            recall=recall,
            f_score=(2 * precision * recall / (precision + recall)) if precision + recall else 0.0,
        )

    defined = [m for m in per_class.values() if m is not None]

    def mean(attr: str) -> float | None:
        if not defined:
            return None
        return sum(getattr(m, attr) for m in defined) / len(defined)

    return SegMetricsReport(
        per_class=per_class,
        mean_iou=mean("iou"),
        mean_accuracy=mean("accuracy"),
        mean_precision=mean("precision"),
        mean_recall=mean("recall"),
        mean_f_score=mean("f_score"),
    )


def evaluate_layout(
    pred_pages: dict[str, ClassMap],
    gt_pages: dict[str, ClassMap],
    classes=ALL_CLASSES,
) -> SegMetricsReport:
    """Corpus report: confusion counts summed over pages, then class metrics."""
    missing_gt = sorted(set(pred_pages) - set(gt_pages))
    missing_pred = sorted(set(gt_pages) - set(pred_pages))
    if missing_gt or missing_pred:
        raise ValueError(
            f"page sets differ: missing ground truth for {missing_gt}, "
            f"missing predictions for {missing_pred}"
        )
    if not pred_pages:
        raise ValueError("no pages to evaluate")
    total = None
    for page_id in sorted(pred_pages):
        counts = confusion_matrix(pred_pages[page_id], gt_pages[page_id], classes)
        total = counts if total is None else total + counts
    return class_metrics(total)
