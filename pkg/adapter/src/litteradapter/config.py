"""Adapter configuration and the shared toolkit-file readers."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

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


@dataclass(frozen=True)
class AdapterConfig:
    """Where images and manifests live and how to invoke the model.

    ``command`` is a shell template receiving ``{crops}`` (a crop
    directory) or ``{dataset}`` (an interchange file) and must print one
    JSON object per line on stdout.
    """

    images_root: Path
    manifest_path: Optional[Path] = None
    command: Optional[str] = None
    output_path: Optional[Path] = None
    batch_size: int = 32

    def __post_init__(self) -> None:
        object.__setattr__(self, "images_root", Path(self.images_root))
        if self.manifest_path is not None:
            object.__setattr__(self, "manifest_path", Path(self.manifest_path))
        if self.output_path is not None:
            object.__setattr__(self, "output_path", Path(self.output_path))
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not self.images_root.exists():
            raise ValueError(f"images root does not exist: {self.images_root}")


def read_manifest(path: Path | str) -> list[dict]:
    """Read a crop-manifest file: [{crop_id, image_id, region, ...}]."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(doc, list):
        raise ValueError("crop manifest must be a JSON array")
    for i, item in enumerate(doc):
        for key in ("crop_id", "image_id", "region"):
            if key not in item:
                raise ValueError(f"crops[{i}]: missing field {key!r}")
        if len(item["region"]) != 4:
            raise ValueError(f"crops[{i}]: region must be [x, y, w, h]")
    return doc


def read_dataset_images(path: Path | str) -> list[dict]:
    """Read the images table of an interchange/COCO dataset file."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(doc, dict) or "images" not in doc:
        raise ValueError("dataset file must carry an images array")
    images = doc["images"]
    for i, item in enumerate(images):
        for key in ("id", "file_name", "width", "height"):
            if key not in item:
                raise ValueError(f"images[{i}]: missing field {key!r}")
    return images
