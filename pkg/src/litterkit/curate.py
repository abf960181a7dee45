"""Dataset curation: merging, stratified splitting, statistics, crop
manifests, and composition of the two-stage pipeline output.
"""

from __future__ import annotations

import hashlib
import json
import math
import warnings
from collections import Counter
from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Optional, Sequence

from .detection_metrics import bucket
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
    LITTER,
    LITTER_CLASS_ID,
    ParseError,
    SchemaError,
    TARGET_CLASS_IDS,
    BACKGROUND,
    clamp_bbox,
)


def merge(datasets: Sequence[Dataset]) -> Dataset:
    """Combine datasets into one, renumbering ids to be globally unique.

    Image and annotation counts add up exactly; categories are unified by
    name. Image file names that collide across different sources are
    disambiguated by prefixing the source dataset name.
    """
    provenance: list[str] = []
    for ds in datasets:
        for src in ds.provenance:
            if src not in provenance:
                provenance.append(src)

    # file_name -> set of sources, to detect cross-source collisions
    sources_by_name: dict[str, set[str]] = {}
    for ds in datasets:
        for im in ds.images:
            sources_by_name.setdefault(im.file_name, set()).add(im.source_dataset)

    categories: list[CategoryDef] = []
    cat_id_by_name: dict[str, int] = {}
    images: list[ImageRecord] = []
    annotations: list[AnnotationRecord] = []
    for ds in datasets:
        image_map: dict[int, int] = {}
        cat_map: dict[int, int] = {}
        for cat in ds.categories:
            if cat.name not in cat_id_by_name:
                cat_id_by_name[cat.name] = len(categories) + 1
                categories.append(
                    CategoryDef(
                        id=cat_id_by_name[cat.name],
                        name=cat.name,
                        source_dataset=cat.source_dataset,
                    )
                )
            cat_map[cat.id] = cat_id_by_name[cat.name]
        for im in ds.images:
            new_id = len(images) + 1
            image_map[im.id] = new_id
            file_name = im.file_name
            if len(sources_by_name[file_name]) > 1:
                file_name = f"{im.source_dataset}/{file_name}"
            images.append(replace(im, id=new_id, file_name=file_name))
        for ann in ds.annotations:
            annotations.append(
                replace(
                    ann,
                    id=len(annotations) + 1,
                    image_id=image_map[ann.image_id],
                    category_id=cat_map[ann.category_id],
                )
            )
    return Dataset(images, annotations, categories, provenance)


@dataclass(frozen=True)
class SplitSpec:
    """Train/test split parameters: fraction, seed, and stratification axis."""

    train_fraction: float
    seed: int
    stratify_by: str = "category"

    def __post_init__(self) -> None:
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must lie in (0, 1)")
        if self.stratify_by not in ("category", "source_dataset", "none"):
            raise ValueError(
                "stratify_by must be 'category', 'source_dataset' or 'none'"
            )


def _train_count(fraction: float, n: int) -> int:
    # nearest integer, ties toward train, never leaving a stratum untrained
    return min(n, max(1, math.floor(fraction * n + 0.5)))


def _shuffle_key(seed: int, image_id: int) -> bytes:
    digest = hashlib.blake2b(
        str(image_id).encode("ascii"),
        key=(seed & 0xFFFFFFFFFFFFFFFF).to_bytes(8, "little"),
        digest_size=8,
    )
    return digest.digest()


def _stratum_key(
    image: ImageRecord,
    anns: Sequence[AnnotationRecord],
    names: Mapping[int, str],
    stratify_by: str,
) -> str:
    if stratify_by == "none":
        return ""
    if stratify_by == "source_dataset":
        return image.source_dataset
    if not anns:
        return ""
    counts = Counter(names[a.category_id] for a in anns)
    # dominant class; ties go to the lexicographically smallest name
    return sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[0][0]


def split(dataset: Dataset, spec: SplitSpec) -> Dataset:
    """Assign every image to train or test, stratified per `spec`.

    Within each stratum images are ordered by a keyed pseudo-random
    permutation of their ids (seeded, machine-independent), and the first
    round(train_fraction * stratum size) of them (minimum 1) go to train.
    The result is deterministic under the seed and invariant to the order
    in which images are presented.
    """
    names = {c.id: c.name for c in dataset.categories}
    by_image = dataset.annotations_by_image()
    strata: dict[str, list[ImageRecord]] = {}
    for im in dataset.images:
        key = _stratum_key(im, by_image.get(im.id, ()), names, spec.stratify_by)
        strata.setdefault(key, []).append(im)

    assignment: dict[int, str] = {}
    for key in sorted(strata):
        members = sorted(strata[key], key=lambda im: (_shuffle_key(spec.seed, im.id), im.id))
        n_train = _train_count(spec.train_fraction, len(members))
        for i, im in enumerate(members):
            assignment[im.id] = "train" if i < n_train else "test"

    images = tuple(replace(im, split=assignment[im.id]) for im in dataset.images)
    return Dataset(images, dataset.annotations, dataset.categories, dataset.provenance)


@dataclass(frozen=True)
class DatasetStats:
    """Exact per-source / per-class counts and the instance size histogram.

    Per-class image counts may overlap (an image can carry several
    classes); every other breakdown partitions the dataset totals.
    """

    image_count: int
    annotation_count: int
    category_count: int
    pseudo_annotation_count: int
    images_by_source: Mapping[str, int]
    annotations_by_source: Mapping[str, int]
    images_by_class: Mapping[str, int]
    annotations_by_class: Mapping[str, int]
    size_histogram: Mapping[str, int]


def stats(dataset: Dataset) -> DatasetStats:
    names = {c.id: c.name for c in dataset.categories}
    images_by_source: Counter = Counter(im.source_dataset for im in dataset.images)
    annotations_by_source: Counter = Counter()
    annotations_by_class: Counter = Counter()
    class_images: dict[str, set[int]] = {}
    size_histogram = {"small": 0, "medium": 0, "large": 0}
    pseudo = 0
    for ann in dataset.annotations:
        annotations_by_source[ann.source_dataset] += 1
        name = names.get(ann.category_id, f"#{ann.category_id}")
        annotations_by_class[name] += 1
        class_images.setdefault(name, set()).add(ann.image_id)
        size_histogram[bucket(ann.area)] += 1
        pseudo += int(ann.is_pseudo)
    return DatasetStats(
        image_count=len(dataset.images),
        annotation_count=len(dataset.annotations),
        category_count=len(dataset.categories),
        pseudo_annotation_count=pseudo,
        images_by_source=dict(sorted(images_by_source.items())),
        annotations_by_source=dict(sorted(annotations_by_source.items())),
        images_by_class={k: len(v) for k, v in sorted(class_images.items())},
        annotations_by_class=dict(sorted(annotations_by_class.items())),
        size_histogram=size_histogram,
    )


def stats_to_json_obj(s: DatasetStats) -> dict:
    return {
        "image_count": s.image_count,
        "annotation_count": s.annotation_count,
        "category_count": s.category_count,
        "pseudo_annotation_count": s.pseudo_annotation_count,
        "images_by_source": dict(s.images_by_source),
        "annotations_by_source": dict(s.annotations_by_source),
        "images_by_class": dict(s.images_by_class),
        "annotations_by_class": dict(s.annotations_by_class),
        "size_histogram": dict(s.size_histogram),
    }


def render_stats(s: DatasetStats) -> str:
    lines = [
        f"images       {s.image_count}",
        f"annotations  {s.annotation_count}  (pseudo: {s.pseudo_annotation_count})",
        f"categories   {s.category_count}",
        "",
        "class                 images  annotations",
    ]
    for name in sorted(set(s.images_by_class) | set(s.annotations_by_class)):
        lines.append(
            f"{name:<20}  {s.images_by_class.get(name, 0):>6}  {s.annotations_by_class.get(name, 0):>11}"
        )
    lines.append("")
    lines.append("source                images  annotations")
    for name in sorted(set(s.images_by_source) | set(s.annotations_by_source)):
        lines.append(
            f"{name:<20}  {s.images_by_source.get(name, 0):>6}  {s.annotations_by_source.get(name, 0):>11}"
        )
    lines.append("")
    hist = s.size_histogram
    lines.append(
        f"instance sizes: small={hist['small']} medium={hist['medium']} large={hist['large']}"
    )
    return "\n".join(lines)


def crop_manifest(
    dataset: Dataset,
    margin_fraction: float = 0.0,
    detections: Optional[Sequence[DetectionRecord]] = None,
) -> list[CropRecord]:
    """One crop region per source box (ground truth or detections).

    Each box is expanded by margin_fraction * max(w, h) on every side and
    clamped to its image; regions that collapse to zero area are dropped
    with a warning. crop_id is the 1-based position of the source box, so
    dropped regions leave gaps and ids stay valid back-references.
    """
    if margin_fraction < 0:
        raise ValueError("margin_fraction must be >= 0")
    images = dataset.image_index()
    out: list[CropRecord] = []
    if detections is not None:
        boxes: Iterable[tuple[int, BBox, Optional[int]]] = (
            (det.image_id, det.bbox, None) for det in detections
        )
    else:
        boxes = ((ann.image_id, ann.bbox, ann.id) for ann in dataset.annotations)
    for crop_id, (image_id, box, source_annotation_id) in enumerate(boxes, start=1):
        image = images.get(image_id)
        if image is None:
            raise SchemaError(f"crop source references unknown image {image_id}")
        pad = margin_fraction * max(box.w, box.h)
        raw_left = box.x - pad
        raw_top = box.y - pad
        expanded = BBox(
            max(raw_left, 0.0),
            max(raw_top, 0.0),
            box.w + 2 * pad + min(raw_left, 0.0),
            box.h + 2 * pad + min(raw_top, 0.0),
        )
        region, _ = clamp_bbox(expanded, image.width, image.height)
        if region.area() <= 0:
            warnings.warn(
                f"crop {crop_id} on image {image_id} has zero area after clamping; dropped",
                DataWarning,
                stacklevel=2,
            )
            continue
        out.append(
            CropRecord(
                crop_id=crop_id,
                image_id=image_id,
                region=region,
                source_annotation_id=source_annotation_id,
                margin_fraction=margin_fraction,
            )
        )
    return out


def compose_two_stage(
    detections: Sequence[DetectionRecord],
    crops: Sequence[CropRecord],
    predictions: Sequence[ClassPrediction],
) -> list[DetectionRecord]:
    """Merge stage-2 class predictions back onto stage-1 detections.

    Crop k (by crop_id) is the crop of detections[k-1]. A detection whose
    crop was classified into a waste class is re-labelled with it (stable
    ids, bio=1 ... unknown=7), keeping the detector's box and score; a
    background classification removes the detection; detections without a
    prediction keep the class-agnostic "litter" label (category id 0).
    The classification score rides along as auxiliary metadata.
    """
    crops_by_id = {c.crop_id: c for c in crops}
    by_crop: dict[int, ClassPrediction] = {}
    for pred in predictions:
        crop = crops_by_id.get(pred.crop_id)
        if crop is None:
            raise SchemaError(f"prediction references unknown crop {pred.crop_id}")
        if not 1 <= pred.crop_id <= len(detections):
            raise SchemaError(
                f"crop {pred.crop_id} does not trace back to any of the "
                f"{len(detections)} detections"
            )
        if pred.crop_id in by_crop:
            raise SchemaError(f"multiple predictions for crop {pred.crop_id}")
        by_crop[pred.crop_id] = pred

    out: list[DetectionRecord] = []
    for k, det in enumerate(detections, start=1):
        pred = by_crop.get(k)
        if pred is None:
            out.append(
                replace(det, category_id=LITTER_CLASS_ID, label=LITTER, class_score=None)
            )
        elif pred.label == BACKGROUND:
            continue
        else:
            out.append(
                replace(
                    det,
                    category_id=TARGET_CLASS_IDS[pred.label],
                    label=pred.label,
                    class_score=pred.score,
                )
            )
    return out


def manifest_to_json(crops: Sequence[CropRecord]) -> str:
    items = [
        {
            "crop_id": c.crop_id,
            "image_id": c.image_id,
            "region": c.region.as_list(),
            "source_annotation_id": c.source_annotation_id,
            "margin_fraction": c.margin_fraction,
        }
        for c in crops
    ]
    return json.dumps(items, ensure_ascii=False, sort_keys=True, separators=(",", ":"))


def manifest_from_json(text: str) -> list[CropRecord]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed JSON at offset {exc.pos}: {exc.msg}") from exc
    if not isinstance(doc, list):
        raise SchemaError("crop manifest must be a JSON array")
    out: list[CropRecord] = []
    for i, item in enumerate(doc):
        where = f"crops[{i}]"
        if not isinstance(item, dict):
            raise SchemaError(f"{where}: expected an object")
        for key in ("crop_id", "image_id", "region", "margin_fraction"):
            if key not in item:
                raise SchemaError(f'{where}: missing field "{key}"')
        region = item["region"]
        if not isinstance(region, list) or len(region) != 4:
            raise SchemaError(f"{where}: region must be [x, y, w, h]")
        source_ann = item.get("source_annotation_id")
        try:
            out.append(
                CropRecord(
                    crop_id=int(item["crop_id"]),
                    image_id=int(item["image_id"]),
                    region=BBox(*(float(v) for v in region)),
                    source_annotation_id=None if source_ann is None else int(source_ann),
                    margin_fraction=float(item["margin_fraction"]),
                )
            )
        except (TypeError, ValueError) as exc:
            raise SchemaError(f"{where}: {exc}") from exc
    return out
