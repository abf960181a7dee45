"""Pixel extraction: cut each manifest region out of its source image."""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

from PIL import Image

from .config import read_dataset_images, read_manifest


def crop_file_name(crop_id: int) -> str:
    return f"crop_{crop_id:06d}.png"


def _pixel_box(region: Sequence[float], width: int, height: int) -> tuple[int, int, int, int]:
    x, y, w, h = region
    left = min(max(int(round(x)), 0), width)
    top = min(max(int(round(y)), 0), height)
    right = min(max(int(round(x + w)), left), width)
    bottom = min(max(int(round(y + h)), top), height)
    return left, top, right, bottom


def extract_crops(
    manifest: Sequence[Mapping] | str | Path,
    images_root: str | Path,
    out_dir: str | Path,
    *,
    dataset_path: str | Path | None = None,
    file_names: Mapping[int, str] | None = None,
    batch_size: int = 32,
) -> int:
    """Write one image file per crop record; returns the count written.

    Image files are resolved as images_root / file_name, where file_name
    comes either from an interchange dataset file (``dataset_path``) or a
    direct ``{image_id: file_name}`` mapping. Crops are written as
    ``crop_<id>.png`` with pixels exactly the manifest region.
    """
    if isinstance(manifest, (str, Path)):
        manifest = read_manifest(manifest)
    if file_names is None:
        if dataset_path is None:
            raise ValueError("either dataset_path or file_names is required")
        file_names = {
            im["id"]: im["file_name"] for im in read_dataset_images(dataset_path)
        }
    images_root = Path(images_root)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    written = 0
    records = list(manifest)
    for start in range(0, len(records), batch_size):
        for crop in records[start : start + batch_size]:
            image_id = crop["image_id"]
            if image_id not in file_names:
                raise ValueError(f"crop {crop['crop_id']}: unknown image id {image_id}")
            path = images_root / file_names[image_id]
            if not path.exists():
                raise FileNotFoundError(f"missing image file: {path}")
            with Image.open(path) as image:
                box = _pixel_box(crop["region"], image.width, image.height)
                patch = image.crop(box)
                patch.save(out_dir / crop_file_name(crop["crop_id"]))
            written += 1
    return written
