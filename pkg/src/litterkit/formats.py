"""Parsers and emitters for the three annotation-source families.

Supported sources:

* COCO-style detection JSON (``images`` / ``annotations`` / ``categories``).
* YOLO text labels, one file per image of ``class cx cy w h`` fraction lines.
* Label-directory manifests mapping a class name to the image files filed
  under it (whole-image labels).

The toolkit's own interchange format is a strict superset of the COCO
layout: ``source_dataset`` on images/annotations/categories, ``split`` on
images, ``is_pseudo`` on annotations, and a top-level ``provenance`` list.
``emit`` writes it byte-stably (sorted keys, compact separators, shortest
round-trip float representation) so identical datasets always serialize to
identical bytes.

The parsers never open image pixels: they are metadata engines, and YOLO /
label-directory ingestion takes externally supplied image dimensions.
"""

from __future__ import annotations

import json
import warnings
from typing import Mapping, Sequence

from .model import (
    AnnotationRecord,
    BBox,
    BOUNDS_EPS,
    CategoryDef,
    DataWarning,
    Dataset,
    ImageRecord,
    ParseError,
    SchemaError,
    SPLITS,
    clamp_bbox,
)


def _load_json(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed JSON at offset {exc.pos}: {exc.msg}") from exc


def _require(obj: Mapping, key: str, where: str):
    if not isinstance(obj, Mapping):
        raise SchemaError(f"{where}: expected an object")
    if key not in obj:
        raise SchemaError(f'{where}: missing field "{key}"')
    return obj[key]


def _int_field(value, where: str) -> int:
    if isinstance(value, bool):
        raise SchemaError(f"{where}: expected an integer, got boolean")
    if isinstance(value, int):
        return value
    if isinstance(value, float) and value.is_integer():
        return int(value)
    raise SchemaError(f"{where}: expected an integer, got {value!r}")


def _float_field(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(f"{where}: expected a number, got {value!r}")
    return float(value)


def _bbox_field(raw, where: str) -> BBox:
    if not isinstance(raw, Sequence) or len(raw) != 4:
        raise SchemaError(f"{where}: bbox must be [x, y, w, h]")
    x, y, w, h = (_float_field(v, where) for v in raw)
    try:
        return BBox(x, y, w, h)
    except ValueError as exc:
        raise SchemaError(f"{where}: {exc}") from exc


def _bbox_from_segmentation(raw, where: str) -> BBox:
    # Polygon lists only; masks reduce to their bounding boxes.
    if not isinstance(raw, Sequence) or not raw:
        raise SchemaError(f"{where}: unsupported segmentation, provide a bbox")
    xs: list[float] = []
    ys: list[float] = []
    for poly in raw:
        if not isinstance(poly, Sequence) or len(poly) < 4 or len(poly) % 2:
            raise SchemaError(f"{where}: unsupported segmentation, provide a bbox")
        coords = [_float_field(v, where) for v in poly]
        xs.extend(coords[0::2])
        ys.extend(coords[1::2])
    return BBox(min(xs), min(ys), max(xs) - min(xs), max(ys) - min(ys))


def _clamped(bbox: BBox, image: ImageRecord, ann_id: int) -> BBox:
    if bbox.x + bbox.w <= image.width + BOUNDS_EPS and (
        bbox.y + bbox.h <= image.height + BOUNDS_EPS
    ):
        return bbox
    clamped, changed = clamp_bbox(bbox, image.width, image.height)
    if changed:
        warnings.warn(
            f"annotation {ann_id}: bbox {bbox.as_list()} clamped to "
            f"{image.width}x{image.height} bounds of {image.file_name!r}",
            DataWarning,
            stacklevel=3,
        )
    return clamped


def _parse_images(raw, source_name: str, honor_split: bool) -> list[ImageRecord]:
    images: list[ImageRecord] = []
    seen: set[int] = set()
    for i, item in enumerate(raw):
        where = f"images[{i}]"
        image_id = _int_field(_require(item, "id", where), where)
        if image_id < 1:
            raise SchemaError(f"{where}: id must be >= 1, got {image_id}")
        if image_id in seen:
            raise SchemaError(f"{where}: duplicate image id {image_id}")
        seen.add(image_id)
        width = _int_field(_require(item, "width", where), where)
        height = _int_field(_require(item, "height", where), where)
        if width <= 0 or height <= 0:
            raise SchemaError(f"{where}: dimensions must be positive, got {width}x{height}")
        split = "unassigned"
        if honor_split and "split" in item:
            split = item["split"]
            if split not in SPLITS:
                raise SchemaError(f'{where}: split must be one of {SPLITS}, got {split!r}')
        source = item.get("source_dataset", source_name) if honor_split else source_name
        images.append(
            ImageRecord(
                id=image_id,
                file_name=str(_require(item, "file_name", where)),
                width=width,
                height=height,
                source_dataset=source,
                split=split,
            )
        )
    return images


def _parse_categories(raw, source_name: str, honor_extras: bool) -> list[CategoryDef]:
    categories: list[CategoryDef] = []
    seen: set[int] = set()
    for i, item in enumerate(raw):
        where = f"categories[{i}]"
        cat_id = _int_field(_require(item, "id", where), where)
        if cat_id < 1:
            raise SchemaError(f"{where}: id must be >= 1, got {cat_id}")
        if cat_id in seen:
            raise SchemaError(f"{where}: duplicate category id {cat_id}")
        seen.add(cat_id)
        name = str(_require(item, "name", where))
        if not name:
            raise SchemaError(f"{where}: empty category name")
        source = item.get("source_dataset", source_name) if honor_extras else source_name
        categories.append(CategoryDef(id=cat_id, name=name, source_dataset=source))
    return categories


def _parse_annotations(
    raw,
    images: Sequence[ImageRecord],
    categories: Sequence[CategoryDef],
    source_name: str,
    honor_extras: bool,
    allow_segmentation: bool,
) -> list[AnnotationRecord]:
    image_index = {im.id: im for im in images}
    cat_ids = {c.id for c in categories}
    annotations: list[AnnotationRecord] = []
    seen: set[int] = set()
    for i, item in enumerate(raw):
        where = f"annotations[{i}]"
        ann_id = _int_field(_require(item, "id", where), where)
        if ann_id < 1:
            raise SchemaError(f"{where}: id must be >= 1, got {ann_id}")
        if ann_id in seen:
            raise SchemaError(f"{where}: duplicate annotation id {ann_id}")
        seen.add(ann_id)
        image_id = _int_field(_require(item, "image_id", where), where)
        category_id = _int_field(_require(item, "category_id", where), where)
        image = image_index.get(image_id)
        if image is None:
            raise SchemaError(f"{where} (id {ann_id}): unknown image_id {image_id}")
        if category_id not in cat_ids:
            raise SchemaError(f"{where} (id {ann_id}): unknown category_id {category_id}")
        if "bbox" in item:
            bbox = _bbox_field(item["bbox"], where)
        elif allow_segmentation and "segmentation" in item:
            bbox = _bbox_from_segmentation(item["segmentation"], where)
        else:
            raise SchemaError(f'{where}: missing field "bbox"')
        bbox = _clamped(bbox, image, ann_id)
        area = _float_field(item["area"], where) if "area" in item else bbox.area()
        is_pseudo = bool(item.get("is_pseudo", False))
        source = item.get("source_dataset", source_name) if honor_extras else source_name
        annotations.append(
            AnnotationRecord(
                id=ann_id,
                image_id=image_id,
                category_id=category_id,
                bbox=bbox,
                area=area,
                is_pseudo=is_pseudo,
                source_dataset=source,
            )
        )
    return annotations


def ingest_coco(json_document: str, source_name: str) -> Dataset:
    """Parse a COCO-style detection document into a Dataset.

    Segmentation polygons, when present without a bbox, are reduced to
    their bounding boxes and then dropped. Boxes that exceed image bounds
    are clamped with a DataWarning rather than rejected.
    """
    doc = _load_json(json_document)
    if not isinstance(doc, Mapping):
        raise SchemaError("top-level value must be an object")
    for key in ("images", "annotations", "categories"):
        if key not in doc:
            raise SchemaError(f'missing field "{key}"')
        if not isinstance(doc[key], list):
            raise SchemaError(f'field "{key}" must be an array')
    images = _parse_images(doc["images"], source_name, honor_split=False)
    categories = _parse_categories(doc["categories"], source_name, honor_extras=False)
    annotations = _parse_annotations(
        doc["annotations"], images, categories, source_name,
        honor_extras=False, allow_segmentation=True,
    )
    return Dataset(images, annotations, categories, provenance=(source_name,))


def ingest_yolo(
    label_files: Mapping[str, str],
    image_dims: Mapping[str, tuple[int, int]],
    class_names: Sequence[str],
    source_name: str,
) -> Dataset:
    """Parse YOLO label texts (one per image) into a Dataset.

    ``label_files`` maps an image name to its label text and ``image_dims``
    maps the same names to (width, height). Lines are
    ``class_index cx cy w h`` with center/size fractions in [0, 1];
    conversion to absolute pixels is x = (cx - w/2) * W, y = (cy - h/2) * H,
    w_abs = w * W, h_abs = h * H.
    """
    if not class_names:
        raise SchemaError("class_names must not be empty")
    for name in class_names:
        if not name:
            raise SchemaError("class names must be non-empty")
    categories = [
        CategoryDef(id=i + 1, name=str(name), source_dataset=source_name)
        for i, name in enumerate(class_names)
    ]
    images: list[ImageRecord] = []
    annotations: list[AnnotationRecord] = []
    ann_id = 0
    for image_seq, (file_name, text) in enumerate(label_files.items(), start=1):
        if file_name not in image_dims:
            raise SchemaError(f'unknown image dimensions for "{file_name}"')
        width, height = image_dims[file_name]
        width = _int_field(width, file_name)
        height = _int_field(height, file_name)
        if width <= 0 or height <= 0:
            raise SchemaError(f"{file_name}: dimensions must be positive")
        image = ImageRecord(
            id=image_seq, file_name=str(file_name), width=width, height=height,
            source_dataset=source_name,
        )
        images.append(image)
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 5:
                raise SchemaError(
                    f"{file_name}:{lineno}: expected 5 fields, got {len(parts)}"
                )
            try:
                class_index = int(parts[0])
                fractions = [float(p) for p in parts[1:]]
            except ValueError as exc:
                raise SchemaError(f"{file_name}:{lineno}: {exc}") from exc
            if not 0 <= class_index < len(class_names):
                raise SchemaError(
                    f"{file_name}:{lineno}: class index {class_index} out of range "
                    f"for {len(class_names)} classes"
                )
            for value in fractions:
                if not 0.0 <= value <= 1.0:
                    raise SchemaError(
                        f"{file_name}:{lineno}: fraction {value} outside [0, 1]"
                    )
            cx, cy, w, h = fractions
            raw = BBox(
                max((cx - w / 2.0) * width, 0.0),
                max((cy - h / 2.0) * height, 0.0),
                w * width,
                h * height,
            )
            if (cx - w / 2.0) < 0 or (cy - h / 2.0) < 0:
                warnings.warn(
                    f"{file_name}:{lineno}: box center/extent spills over the top-left "
                    "edge; clamped",
                    DataWarning,
                    stacklevel=2,
                )
            ann_id += 1
            bbox = _clamped(raw, image, ann_id)
            annotations.append(
                AnnotationRecord(
                    id=ann_id,
                    image_id=image.id,
                    category_id=class_index + 1,
                    bbox=bbox,
                    area=bbox.area(),
                    source_dataset=source_name,
                )
            )
    return Dataset(images, annotations, categories, provenance=(source_name,))


def ingest_label_dirs(
    directory_manifest: Mapping[str, Sequence[str]],
    image_dims: Mapping[str, tuple[int, int]],
    source_name: str,
) -> Dataset:
    """Parse a class-directory manifest (class name -> image files).

    Each listed file yields one whole-image annotation, bbox = (0, 0,
    width, height). A file listed under several classes keeps one image
    record with one annotation per listing (multi-label preserved).
    """
    categories: list[CategoryDef] = []
    for i, class_name in enumerate(directory_manifest):
        if not class_name:
            raise SchemaError("class names must be non-empty")
        categories.append(CategoryDef(id=i + 1, name=str(class_name), source_dataset=source_name))

    images: list[ImageRecord] = []
    image_ids: dict[str, int] = {}
    annotations: list[AnnotationRecord] = []
    ann_id = 0
    for cat, (class_name, file_names) in zip(categories, directory_manifest.items()):
        for file_name in file_names:
            if file_name not in image_ids:
                if file_name not in image_dims:
                    raise SchemaError(f'unknown image dimensions for "{file_name}"')
                width, height = image_dims[file_name]
                width = _int_field(width, file_name)
                height = _int_field(height, file_name)
                if width <= 0 or height <= 0:
                    raise SchemaError(f"{file_name}: dimensions must be positive")
                image_ids[file_name] = len(images) + 1
                images.append(
                    ImageRecord(
                        id=image_ids[file_name],
                        file_name=str(file_name),
                        width=width,
                        height=height,
                        source_dataset=source_name,
                    )
                )
            image = images[image_ids[file_name] - 1]
            ann_id += 1
            bbox = BBox(0.0, 0.0, image.width, image.height)
            annotations.append(
                AnnotationRecord(
                    id=ann_id,
                    image_id=image.id,
                    category_id=cat.id,
                    bbox=bbox,
                    area=bbox.area(),
                    source_dataset=source_name,
                )
            )
    return Dataset(images, annotations, categories, provenance=(source_name,))


def emit(dataset: Dataset) -> str:
    """Serialize a Dataset to interchange-format JSON, byte-stably.

    The caller is responsible for passing a dataset that validates
    cleanly; emit itself serializes whatever it is given.
    """
    doc = {
        "images": [
            {
                "id": im.id,
                "file_name": im.file_name,
                "width": im.width,
                "height": im.height,
                "source_dataset": im.source_dataset,
                "split": im.split,
            }
            for im in dataset.images
        ],
        "annotations": [
            {
                "id": ann.id,
                "image_id": ann.image_id,
                "category_id": ann.category_id,
                "bbox": ann.bbox.as_list(),
                "area": ann.area,
                "is_pseudo": ann.is_pseudo,
                "source_dataset": ann.source_dataset,
            }
            for ann in dataset.annotations
        ],
        "categories": [
            {"id": c.id, "name": c.name, "source_dataset": c.source_dataset}
            for c in dataset.categories
        ],
        "provenance": list(dataset.provenance),
    }
    return json.dumps(doc, ensure_ascii=False, sort_keys=True, separators=(",", ":"))


def load(text: str) -> Dataset:
    """Parse interchange-format JSON back into a Dataset.

    Interchange extras missing from a plain COCO document default to
    ``source_dataset=""``, ``split="unassigned"``, ``is_pseudo=False``.
    """
    doc = _load_json(text)
    if not isinstance(doc, Mapping):
        raise SchemaError("top-level value must be an object")
    for key in ("images", "annotations", "categories"):
        if key not in doc:
            raise SchemaError(f'missing field "{key}"')
        if not isinstance(doc[key], list):
            raise SchemaError(f'field "{key}" must be an array')
    images = _parse_images(doc["images"], "", honor_split=True)
    categories = _parse_categories(doc["categories"], "", honor_extras=True)
    annotations = _parse_annotations(
        doc["annotations"], images, categories, "",
        honor_extras=True, allow_segmentation=False,
    )
    provenance = doc.get("provenance", [])
    if not isinstance(provenance, list):
        raise SchemaError('field "provenance" must be an array')
    return Dataset(images, annotations, categories, tuple(str(p) for p in provenance))
