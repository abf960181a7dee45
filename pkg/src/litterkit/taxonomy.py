"""Mapping of arbitrary source categories onto the seven sorting classes.

A TaxonomyMap is data, not code: it lives in a user-editable JSON file of
``(source dataset, category name) -> target class`` entries with an
optional default. A per-source ``"*"`` entry matches every category of
that source (used to file whole scene-collections under ``background``).

Applying a map rewrites a dataset onto the target classes with stable ids
(bio=1 ... unknown=7). Categories mapped to ``background`` lose their
boxes but keep their images as negative samples.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from typing import Mapping, Optional

from .model import (
    AnnotationRecord,
    BACKGROUND,
    CategoryDef,
    Dataset,
    LITTER,
    ParseError,
    SchemaError,
    TARGET_CLASS_IDS,
    TARGET_CLASSES,
    WASTE_CLASSES,
)

WILDCARD = "*"

__all__ = [
    "TARGET_CLASSES",
    "WASTE_CLASSES",
    "TARGET_CLASS_IDS",
    "BACKGROUND",
    "LITTER",
    "WILDCARD",
    "TaxonomyMap",
    "default_taxonomy",
    "map_categories",
    "collapse_to_single_class",
]


@dataclass(frozen=True)
class TaxonomyMap:
    """Total mapping from (source, category) pairs to target classes."""

    entries: Mapping[tuple[str, str], str] = field(default_factory=dict)
    default: Optional[str] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "entries", dict(self.entries))
        for (source, category), target in self.entries.items():
            if target not in TARGET_CLASSES:
                raise SchemaError(
                    f"entry ({source!r}, {category!r}): unknown target class {target!r}"
                )
        if self.default is not None and self.default not in TARGET_CLASSES:
            raise SchemaError(f"unknown default target class {self.default!r}")

    def resolve(self, source: str, category: str) -> Optional[str]:
        """Target class for a source category, or None when unmapped."""
        hit = self.entries.get((source, category))
        if hit is None:
            hit = self.entries.get((source, WILDCARD))
        if hit is None:
            hit = self.default
        return hit

    def to_json(self) -> str:
        doc = {
            "default": self.default,
            "entries": [
                {"source": source, "category": category, "target": target}
                for (source, category), target in sorted(self.entries.items())
            ],
        }
        return json.dumps(doc, ensure_ascii=False, sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "TaxonomyMap":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"malformed JSON at offset {exc.pos}: {exc.msg}") from exc
        if not isinstance(doc, dict) or "entries" not in doc:
            raise SchemaError('taxonomy file must be an object with an "entries" array')
        if not isinstance(doc["entries"], list):
            raise SchemaError('field "entries" must be an array')
        entries: dict[tuple[str, str], str] = {}
        for i, item in enumerate(doc["entries"]):
            where = f"entries[{i}]"
            if not isinstance(item, dict):
                raise SchemaError(f"{where}: expected an object")
            for key in ("source", "category", "target"):
                if key not in item:
                    raise SchemaError(f'{where}: missing field "{key}"')
            key = (str(item["source"]), str(item["category"]))
            if key in entries:
                raise SchemaError(f"{where}: duplicate entry for {key}")
            entries[key] = str(item["target"])
        return cls(entries=entries, default=doc.get("default"))


def default_taxonomy() -> TaxonomyMap:
    """The shipped best-effort map for the public waste sources.

    Covers the drink-container classes, the whole-image glass/paper
    labels, the unidentifiable-litter tag, and scene photo collections
    (everything to ``background``). Remaining source categories are left
    to the user, optionally via the ``default`` escape hatch.
    """
    text = resources.files("litterkit").joinpath("data/default_taxonomy.json").read_text("utf-8")
    return TaxonomyMap.from_json(text)


def map_categories(dataset: Dataset, taxonomy: TaxonomyMap) -> Dataset:
    """Rewrite a dataset onto the target classes.

    Fails up front, listing every unmapped category, when the map is not
    total over the dataset. Annotations whose category maps to
    ``background`` are removed (their images stay as negative samples);
    counts for every other class are conserved exactly.
    """
    targets: dict[int, str] = {}
    unmapped: list[str] = []
    for cat in dataset.categories:
        target = taxonomy.resolve(cat.source_dataset, cat.name)
        if target is None:
            unmapped.append(f"{cat.source_dataset}/{cat.name}")
        else:
            targets[cat.id] = target
    if unmapped:
        raise SchemaError("unmapped categories: " + ", ".join(sorted(unmapped)))

    present = sorted(
        {t for t in targets.values() if t != BACKGROUND},
        key=TARGET_CLASS_IDS.__getitem__,
    )
    categories = tuple(CategoryDef(id=TARGET_CLASS_IDS[t], name=t) for t in present)
    annotations = []
    for ann in dataset.annotations:
        target = targets[ann.category_id]
        if target == BACKGROUND:
            continue
        annotations.append(
            AnnotationRecord(
                id=ann.id,
                image_id=ann.image_id,
                category_id=TARGET_CLASS_IDS[target],
                bbox=ann.bbox,
                area=ann.area,
                is_pseudo=ann.is_pseudo,
                source_dataset=ann.source_dataset,
            )
        )
    return Dataset(dataset.images, annotations, categories, dataset.provenance)


def collapse_to_single_class(dataset: Dataset) -> Dataset:
    """Collapse every category into one class-agnostic ``litter`` class.

    Annotation count is unchanged; idempotent.
    """
    if not dataset.categories and not dataset.annotations:
        return Dataset(dataset.images, (), (), dataset.provenance)
    categories = (CategoryDef(id=1, name=LITTER),)
    annotations = [
        AnnotationRecord(
            id=ann.id,
            image_id=ann.image_id,
            category_id=1,
            bbox=ann.bbox,
            area=ann.area,
            is_pseudo=ann.is_pseudo,
            source_dataset=ann.source_dataset,
        )
        for ann in dataset.annotations
    ]
    return Dataset(dataset.images, annotations, categories, dataset.provenance)
