"""Layout-segmentation post-processing and OCR evaluation toolkit.

Turns per-pixel layout predictions into ordered, OCR-ready bounding boxes
and scores both isolated segmentation quality and end-to-end recognition.
"""

from .model import (
    AtlasRegion,
    BBox,
    LayoutClass,
    MockAtlas,
    OrderedLayout,
    PageAnnotation,
    Segment,
    SuperBox,
    bbox_union,
)
from .maskops import (
    ComponentLabels,
    argmax_classmap,
    class_mask,
    connected_components,
    fit_bboxes,
    morphological_open,
    otsu_binarize,
    scale_boxes,
    separators_to_blocks,
)
from .geometric import GeometricParams, SnapCollapseError, cluster_snap_boxes, geometric_pipeline
from .heuristic import HeuristicParams, heuristic_pipeline, merge_vertical, order_reading
from .segmetrics import (
    ConfusionCounts,
    SegMetricsReport,
    class_metrics,
    confusion_matrix,
    evaluate_layout,
)
from .ocreval import (
    OcrReport,
    SegmentMatch,
    edit_distance_norm,
    evaluate_ocr,
    evaluate_ocr_corpus,
    map_segments,
    match_interval,
    read_order_accuracy,
    tokenize,
    word_recall,
)
from .engine import (
    BlockCrop,
    EngineError,
    EngineTimeout,
    OcrEngineSpec,
    PageText,
    crop_blocks,
    recognize,
    run_page_ocr,
)
from .synth import SynthPage, SynthSpec, synth_page

__version__ = "0.1.0"

__all__ = [
    "AtlasRegion", "BBox", "LayoutClass", "MockAtlas", "OrderedLayout",
    "PageAnnotation", "Segment", "SuperBox", "bbox_union",
    "ComponentLabels", "argmax_classmap", "class_mask", "connected_components",
    "fit_bboxes", "morphological_open", "otsu_binarize", "scale_boxes",
    "separators_to_blocks",
    "GeometricParams", "SnapCollapseError", "cluster_snap_boxes", "geometric_pipeline",
    "HeuristicParams", "heuristic_pipeline", "merge_vertical", "order_reading",
    "ConfusionCounts", "SegMetricsReport", "class_metrics", "confusion_matrix",
    "evaluate_layout",
    "OcrReport", "SegmentMatch", "edit_distance_norm", "evaluate_ocr",
    "evaluate_ocr_corpus", "map_segments", "match_interval", "read_order_accuracy",
    "tokenize", "word_recall",
    "BlockCrop", "EngineError", "EngineTimeout", "OcrEngineSpec", "PageText",
    "crop_blocks", "recognize", "run_page_ocr",
    "SynthPage", "SynthSpec", "synth_page",
]
