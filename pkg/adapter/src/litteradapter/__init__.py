"""litterkit-adapter: reference glue between models and the toolkit files.

The adapter talks to the main toolkit exclusively through its documented
file formats (interchange datasets, crop manifests, prediction files,
pseudo-label rounds). It cuts crop pixels per a manifest, drives either
the built-in toy models or any external command, and emits prediction
files byte-exactly in the expected schemas.
"""

__version__ = "0.1.0"

from .config import AdapterConfig
from .crops import extract_crops
from .emit import emit_classifications, emit_detections, emit_round
from .models import (
    center_box_detections,
    majority_class_classifications,
    run_classifier_command,
    run_detector_command,
)

__all__ = [
    "__version__",
    "AdapterConfig",
    "center_box_detections",
    "emit_classifications",
    "emit_detections",
    "emit_round",
    "extract_crops",
    "majority_class_classifications",
    "run_classifier_command",
    "run_detector_command",
]
