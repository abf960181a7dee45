"""Shared data model for annotation datasets and model predictions.

Every other module speaks in terms of these records. They are immutable
values: transformations construct new datasets instead of mutating, so
read-only sharing across concurrent workers is safe.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

SPLITS = ("train", "test", "unassigned")

# Closed set of sorting categories. The first seven are waste classes; the
# eighth marks garbage-free content and never appears in detection datasets.
TARGET_CLASSES = (
    "bio",
    "glass",
    "metals_and_plastic",
    "non_recyclable",
    "other",
    "paper",
    "unknown",
    "background",
)
WASTE_CLASSES = TARGET_CLASSES[:7]
BACKGROUND = "background"
LITTER = "litter"

# Stable numeric ids used whenever a dataset or prediction stream is
# re-expressed in sorting categories (bio=1 ... background=8). A composed
# detection that kept its class-agnostic label uses LITTER_CLASS_ID.
TARGET_CLASS_IDS = {name: i + 1 for i, name in enumerate(TARGET_CLASSES)}
LITTER_CLASS_ID = 0


class DataWarning(UserWarning):
    """Recoverable data-quality defect (clamped box, dropped crop, ...)."""


class ParseError(ValueError):
    """Input text is not parseable at all (malformed JSON, etc.)."""


class SchemaError(ValueError):
    """Parsed input violates a required structure or reference."""


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box in absolute pixel coordinates, (x, y) = top-left."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self) -> None:
        for name in ("x", "y", "w", "h"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if self.x < 0 or self.y < 0 or self.w < 0 or self.h < 0:
            raise ValueError(f"bbox fields must be non-negative: {self.as_list()}")

    def area(self) -> float:
        return self.w * self.h

    def as_list(self) -> list[float]:
        return [self.x, self.y, self.w, self.h]


def clamp_bbox(bbox: BBox, width: float, height: float) -> tuple[BBox, bool]:
    """Clamp a box to the [0, width] x [0, height] rectangle.

    Returns the clamped box and whether anything changed. A box entirely
    outside the image collapses to zero extent at the nearest edge.
    """
    left = min(max(bbox.x, 0.0), float(width))
    top = min(max(bbox.y, 0.0), float(height))
    right = min(max(bbox.x + bbox.w, 0.0), float(width))
    bottom = min(max(bbox.y + bbox.h, 0.0), float(height))
    clamped = BBox(left, top, max(right - left, 0.0), max(bottom - top, 0.0))
    changed = clamped != bbox
    return clamped, changed


@dataclass(frozen=True)
class CategoryDef:
    id: int
    name: str
    source_dataset: str = ""


@dataclass(frozen=True)
class ImageRecord:
    id: int
    file_name: str
    width: int
    height: int
    source_dataset: str = ""
    split: str = "unassigned"

    def __post_init__(self) -> None:
        if self.split not in SPLITS:
            raise ValueError(f"split must be one of {SPLITS}, got {self.split!r}")


@dataclass(frozen=True)
class AnnotationRecord:
    id: int
    image_id: int
    category_id: int
    bbox: BBox
    area: float
    is_pseudo: bool = False
    source_dataset: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "area", float(self.area))


@dataclass(frozen=True)
class DetectionRecord:
    """Stage-1 model output: a scored class-labelled box on one image.

    ``label`` and ``class_score`` are auxiliary metadata set by the
    two-stage composition; plain detector outputs leave them unset.
    """

    image_id: int
    category_id: int
    bbox: BBox
    score: float
    label: Optional[str] = None
    class_score: Optional[float] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "score", float(self.score))
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"detection score must be in [0, 1], got {self.score}")


@dataclass(frozen=True)
class ClassPrediction:
    """Stage-2 model output: one sorting-category label per crop."""

    crop_id: int
    label: str
    score: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "score", float(self.score))
        if self.label not in TARGET_CLASSES:
            raise ValueError(f"unknown class label {self.label!r}")
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"prediction score must be in [0, 1], got {self.score}")


@dataclass(frozen=True)
class CropRecord:
    """A pixel region to cut out of an image, traced back to its source box.

    ``crop_id`` is the 1-based position of the source box in the sequence
    the manifest was generated from; dropped (zero-area) regions leave
    gaps, so ids remain stable links back to source annotations or
    detections.
    """

    crop_id: int
    image_id: int
    region: BBox
    source_annotation_id: Optional[int] = None
    margin_fraction: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "margin_fraction", float(self.margin_fraction))
        if self.margin_fraction < 0:
            raise ValueError("margin_fraction must be >= 0")
        if self.region.area() <= 0:
            raise ValueError("crop region must have positive area")


@dataclass(frozen=True)
class Dataset:
    """Images + annotations + categories + provenance, the toolkit currency."""

    images: tuple[ImageRecord, ...] = ()
    annotations: tuple[AnnotationRecord, ...] = ()
    categories: tuple[CategoryDef, ...] = ()
    provenance: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "images", tuple(self.images))
        object.__setattr__(self, "annotations", tuple(self.annotations))
        object.__setattr__(self, "categories", tuple(self.categories))
        object.__setattr__(self, "provenance", tuple(self.provenance))

    def image_index(self) -> dict[int, ImageRecord]:
        return {im.id: im for im in self.images}

    def category_index(self) -> dict[int, CategoryDef]:
        return {c.id: c for c in self.categories}

    def annotations_by_image(self) -> dict[int, list[AnnotationRecord]]:
        out: dict[int, list[AnnotationRecord]] = {}
        for ann in self.annotations:
            out.setdefault(ann.image_id, []).append(ann)
        return out


@dataclass(frozen=True)
class Violation:
    """One failed integrity rule, naming the record that broke it."""

    record_type: str
    record_id: int
    rule: str
    detail: str = ""


# Shared slack for in-bounds checks, so float noise at an image edge is
# neither reported by validate nor "repaired" by ingest clamping.
BOUNDS_EPS = 1e-9
_EPS = BOUNDS_EPS


def validate(dataset: Dataset) -> list[Violation]:
    """Check every dataset invariant; violations are data, not failures.

    Returns an empty list iff the dataset is internally consistent.
    Idempotent and side-effect free.
    """
    out: list[Violation] = []

    seen_images: set[int] = set()
    for im in dataset.images:
        if im.id < 1:
            out.append(Violation("image", im.id, "invalid id", "ids must be >= 1"))
        if im.id in seen_images:
            out.append(Violation("image", im.id, "duplicate id"))
        seen_images.add(im.id)
        if im.width <= 0 or im.height <= 0:
            out.append(
                Violation("image", im.id, "nonpositive dimensions", f"{im.width}x{im.height}")
            )

    seen_cats: set[int] = set()
    for cat in dataset.categories:
        if cat.id < 1:
            out.append(Violation("category", cat.id, "invalid id", "ids must be >= 1"))
        if cat.id in seen_cats:
            out.append(Violation("category", cat.id, "duplicate id"))
        seen_cats.add(cat.id)
        if not cat.name:
            out.append(Violation("category", cat.id, "empty name"))

    images = dataset.image_index()
    seen_anns: set[int] = set()
    for ann in dataset.annotations:
        if ann.id < 1:
            out.append(Violation("annotation", ann.id, "invalid id", "ids must be >= 1"))
        if ann.id in seen_anns:
            out.append(Violation("annotation", ann.id, "duplicate id"))
        seen_anns.add(ann.id)
        image = images.get(ann.image_id)
        if image is None:
            out.append(
                Violation("annotation", ann.id, "dangling image_id", f"image {ann.image_id}")
            )
        if ann.category_id not in seen_cats:
            out.append(
                Violation(
                    "annotation", ann.id, "dangling category_id", f"category {ann.category_id}"
                )
            )
        if ann.area <= 0:
            out.append(Violation("annotation", ann.id, "zero area", f"area={ann.area}"))
        if image is not None:
            box = ann.bbox
            if box.x + box.w > image.width + _EPS or box.y + box.h > image.height + _EPS:
                out.append(
                    Violation(
                        "annotation",
                        ann.id,
                        "bbox out of bounds",
                        f"{box.as_list()} vs {image.width}x{image.height}",
                    )
                )
    return out
