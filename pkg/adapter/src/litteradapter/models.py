"""Built-in toy models and the external-command bridge.

The built-ins make the whole two-stage pipeline demonstrable without any
ML framework: a constant-score center-box "detector" and a
majority-class "classifier". Real models plug in through a shell-command
template that receives the crop directory (or dataset file) and emits
one JSON object per line.
"""

from __future__ import annotations

import json
import shlex
import subprocess
from collections import Counter
from pathlib import Path
from typing import Mapping

from .config import read_dataset_images, read_manifest


def center_box_detections(dataset_path: str | Path, *, score: float = 0.5) -> list[dict]:
    """One centered box per image covering half of each dimension."""
    out = []
    for image in read_dataset_images(dataset_path):
        width, height = image["width"], image["height"]
        out.append(
            {
                "image_id": image["id"],
                "category_id": 1,
                "bbox": [width / 4.0, height / 4.0, width / 2.0, height / 2.0],
                "score": score,
            }
        )
    return out


def majority_class_classifications(
    manifest_path: str | Path,
    labels: Mapping[int, str] | None = None,
) -> list[dict]:
    """Predict the most frequent known label (ties to the alphabetically
    first) for every crop in the manifest; ``unknown`` when no labels are
    given. The score is the majority share."""
    crops = read_manifest(manifest_path)
    if labels:
        counts = Counter(labels.values())
        top = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[0]
        label, share = top[0], top[1] / sum(counts.values())
    else:
        label, share = "unknown", 0.5
    return [
        {"crop_id": crop["crop_id"], "label": label, "score": share}
        for crop in crops
    ]


def _run_jsonl(command: str) -> list[dict]:
    proc = subprocess.run(
        command, shell=True, capture_output=True, text=True, check=False
    )
    if proc.returncode != 0:
        raise RuntimeError(
            f"model command failed ({proc.returncode}): {proc.stderr.strip()}"
        )
    records = []
    for lineno, line in enumerate(proc.stdout.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            records.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise RuntimeError(f"model output line {lineno} is not JSON: {exc}") from exc
    return records


def run_detector_command(command: str, dataset_path: str | Path) -> list[dict]:
    """Run an external detector; template receives {dataset}."""
    return _run_jsonl(command.format(dataset=shlex.quote(str(dataset_path))))


def run_classifier_command(command: str, crops_dir: str | Path) -> list[dict]:
    """Run an external classifier; template receives {crops}."""
    return _run_jsonl(command.format(crops=shlex.quote(str(crops_dir))))
