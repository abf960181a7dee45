"""Byte-exact emission of prediction files in the toolkit schemas.

Field order follows the schemas exactly (detections: image_id,
category_id, bbox, score; classifications: crop_id, label, score) and
scores/boxes are always written as JSON floats, so a score of 1 appears
as ``1.0``. Every record is validated before anything is written.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Mapping, Sequence

from .config import TARGET_CLASSES


def _check_score(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValueError(f"{where}: score must be a number")
    score = float(value)
    if not 0.0 <= score <= 1.0:
        raise ValueError(f"{where}: score {score} outside [0, 1]")
    return score


def detections_to_json(model_output: Sequence[Mapping]) -> str:
    items = []
    for i, record in enumerate(model_output):
        where = f"detections[{i}]"
        for key in ("image_id", "category_id", "bbox", "score"):
            if key not in record:
                raise ValueError(f"{where}: missing field {key!r}")
        bbox = record["bbox"]
        if len(bbox) != 4 or any(not isinstance(v, (int, float)) for v in bbox):
            raise ValueError(f"{where}: bbox must be four numbers")
        x, y, w, h = (float(v) for v in bbox)
        if x < 0 or y < 0 or w < 0 or h < 0:
            raise ValueError(f"{where}: bbox values must be non-negative")
        items.append(
            {
                "image_id": int(record["image_id"]),
                "category_id": int(record["category_id"]),
                "bbox": [x, y, w, h],
                "score": _check_score(record["score"], where),
            }
        )
    return json.dumps(items, ensure_ascii=False, separators=(",", ":"))


def classifications_to_json(model_output: Sequence[Mapping]) -> str:
    items = []
    for i, record in enumerate(model_output):
        where = f"classifications[{i}]"
        for key in ("crop_id", "label", "score"):
            if key not in record:
                raise ValueError(f"{where}: missing field {key!r}")
        label = str(record["label"])
        if label not in TARGET_CLASSES:
            raise ValueError(f"{where}: unknown class label {label!r}")
        items.append(
            {
                "crop_id": int(record["crop_id"]),
                "label": label,
                "score": _check_score(record["score"], where),
            }
        )
    return json.dumps(items, ensure_ascii=False, separators=(",", ":"))


def emit_detections(model_output: Sequence[Mapping], path: str | Path) -> Path:
    """Validate and write a detection prediction file."""
    text = detections_to_json(model_output)
    path = Path(path)
    path.write_text(text + "\n", encoding="utf-8")
    return path


def emit_classifications(model_output: Sequence[Mapping], path: str | Path) -> Path:
    """Validate and write a classification prediction file."""
    text = classifications_to_json(model_output)
    path = Path(path)
    path.write_text(text + "\n", encoding="utf-8")
    return path


def emit_round(
    model_output: Sequence[Mapping],
    round_index: int,
    epoch: int,
    path: str | Path,
) -> Path:
    """Validate and write a pseudo-label round file."""
    predictions = json.loads(classifications_to_json(model_output))
    doc = {"round_index": int(round_index), "epoch": int(epoch), "predictions": predictions}
    path = Path(path)
    path.write_text(
        json.dumps(doc, ensure_ascii=False, separators=(",", ":")) + "\n",
        encoding="utf-8",
    )
    return path
