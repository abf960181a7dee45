"""litterkit: dataset assembly, curation, and metrics for two-stage
litter detection pipelines.

The library is organized by pipeline stage: `formats` parses annotation
sources into the shared `model` records, `taxonomy` retargets categories
onto the seven sorting classes, `curate` merges/splits/crops and composes
the two-stage output, and `detection_metrics` / `classification_metrics` /
`pseudolabel` cover evaluation and semi-supervised bookkeeping. The `cli`
module exposes each stage as a subcommand over bit-exact JSON files.
"""

__version__ = "0.1.0"

from .model import (
    AnnotationRecord,
    BBox,
    CategoryDef,
    ClassPrediction,
    CropRecord,
    DataWarning,
    Dataset,
    DetectionRecord,
    ImageRecord,
    ParseError,
    SchemaError,
    TARGET_CLASSES,
    Violation,
    WASTE_CLASSES,
    clamp_bbox,
    validate,
)
from .formats import emit, ingest_coco, ingest_label_dirs, ingest_yolo, load
from .taxonomy import TaxonomyMap, collapse_to_single_class, default_taxonomy, map_categories
from .curate import (
    DatasetStats,
    SplitSpec,
    compose_two_stage,
    crop_manifest,
    merge,
    split,
    stats,
)
from .detection_metrics import (
    COCO_THRESHOLDS,
    EvalSummary,
    average_precision,
    bucket,
    evaluate,
    iou,
    match,
)
from .classification_metrics import ClassReport, ConfusionMatrix, confusion, report
from .pseudolabel import (
    PseudoLabelState,
    Round,
    assign,
    replay,
    sampler_weights,
    training_view,
)

__all__ = [
    "__version__",
    "AnnotationRecord",
    "BBox",
    "CategoryDef",
    "ClassPrediction",
    "ClassReport",
    "COCO_THRESHOLDS",
    "ConfusionMatrix",
    "CropRecord",
    "DataWarning",
    "Dataset",
    "DatasetStats",
    "DetectionRecord",
    "EvalSummary",
    "ImageRecord",
    "ParseError",
    "PseudoLabelState",
    "Round",
    "SchemaError",
    "SplitSpec",
    "TARGET_CLASSES",
    "TaxonomyMap",
    "Violation",
    "WASTE_CLASSES",
    "assign",
    "average_precision",
    "bucket",
    "clamp_bbox",
    "collapse_to_single_class",
    "compose_two_stage",
    "confusion",
    "crop_manifest",
    "default_taxonomy",
    "emit",
    "evaluate",
    "ingest_coco",
    "ingest_label_dirs",
    "ingest_yolo",
    "iou",
    "load",
    "map_categories",
    "match",
    "merge",
    "replay",
    "report",
    "sampler_weights",
    "split",
    "stats",
    "training_view",
    "validate",
]
