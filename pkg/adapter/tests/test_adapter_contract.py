"""Contract acceptance: everything the adapter writes is accepted by the
main toolkit's command line with a clean exit and zero warnings."""

import json
import shutil
import subprocess

import numpy as np
import pytest
from PIL import Image

from litteradapter import extract_crops
from litteradapter.cli import run as adapter_run

LITTERKIT = shutil.which("litterkit")

pytestmark = pytest.mark.skipif(
    LITTERKIT is None, reason="primary litterkit CLI not installed"
)


def toolkit(*argv):
    proc = subprocess.run(
        [LITTERKIT, *argv], capture_output=True, text=True, check=False
    )
    assert proc.returncode == 0, proc.stderr
    assert proc.stderr == "", f"expected zero warnings, got: {proc.stderr}"
    return proc.stdout


def build_scene(tmp_path):
    """Synthetic two-image dataset with real pixels on disk."""
    images_root = tmp_path / "images"
    images_root.mkdir()
    rng = np.random.default_rng(5)
    for name in ("scene_a.png", "scene_b.png"):
        pixels = rng.integers(0, 255, size=(120, 160, 3), dtype=np.uint8)
        Image.fromarray(pixels, mode="RGB").save(images_root / name)
    raw = tmp_path / "raw.json"
    raw.write_text(json.dumps({
        "images": [
            {"id": 1, "file_name": "scene_a.png", "width": 160, "height": 120},
            {"id": 2, "file_name": "scene_b.png", "width": 160, "height": 120},
        ],
        "annotations": [
            {"id": 1, "image_id": 1, "category_id": 1, "bbox": [40, 30, 80, 60]},
            {"id": 2, "image_id": 2, "category_id": 1, "bbox": [40, 30, 80, 60]},
        ],
        "categories": [{"id": 1, "name": "litter"}],
    }), encoding="utf-8")
    dataset = tmp_path / "dataset.json"
    toolkit("ingest", "--format", "coco", "-i", str(raw),
            "--source", "scene", "-o", str(dataset))
    return images_root, dataset


def test_full_two_stage_contract(tmp_path):
    images_root, dataset = build_scene(tmp_path)

    # stage 1: built-in detector output must evaluate cleanly
    detections = tmp_path / "detections.json"
    assert adapter_run(["detect", "--dataset", str(dataset),
                        "--output", str(detections)]) == 0
    summary = json.loads(toolkit(
        "eval-det", "-i", str(dataset), "--detections", str(detections),
        "--preset", "coco",
    ))
    assert summary["ap_50"] == 1.0  # center box == the fixture's ground truth

    # crops from those detections, pixels cut by the adapter
    manifest = tmp_path / "crops.json"
    toolkit("crops", "-i", str(dataset), "--detections", str(detections),
            "-o", str(manifest))
    crops_dir = tmp_path / "crops"
    count = extract_crops(manifest, images_root, crops_dir, dataset_path=dataset)
    assert count == 2
    assert len(list(crops_dir.iterdir())) == 2

    # stage 2: classification via the built-in majority-class model
    labels = tmp_path / "labels.json"
    labels.write_text(json.dumps([
        {"crop_id": 1, "label": "glass"},
        {"crop_id": 2, "label": "glass"},
    ]), encoding="utf-8")
    classifications = tmp_path / "cls.json"
    round_file = tmp_path / "round.json"
    assert adapter_run([
        "classify", "--manifest", str(manifest), "--labels", str(labels),
        "--output", str(classifications),
        "--round-output", str(round_file), "--round-index", "0", "--epoch", "0",
    ]) == 0

    # classification file feeds both eval-cls and compose with zero warnings
    report = json.loads(toolkit(
        "eval-cls", "--truth", str(labels), "--predictions", str(classifications)
    ))
    assert report["accuracy"] == 1.0
    composed = json.loads(toolkit(
        "compose", "--detections", str(detections), "--crops", str(manifest),
        "--predictions", str(classifications),
    ))
    assert [d["label"] for d in composed] == ["glass", "glass"]

    # round file feeds the pseudo-label engine
    pool = tmp_path / "pool.json"
    pool.write_text("[1, 2]", encoding="utf-8")
    state_out = tmp_path / "state.json"
    toolkit("pseudo-label", "--init", "--pool", str(pool),
            "--round", str(round_file), "-o", str(state_out))
    state = json.loads(state_out.read_text(encoding="utf-8"))
    assert set(state["assigned"]) == {"1", "2"}

    print("PASS: adapter detections/classifications/rounds all load through "
          "the primary CLI with zero warnings")


def test_adapter_cli_crop_extraction(tmp_path):
    images_root, dataset = build_scene(tmp_path)
    detections = tmp_path / "detections.json"
    adapter_run(["detect", "--dataset", str(dataset), "--output", str(detections)])
    manifest = tmp_path / "crops.json"
    toolkit("crops", "-i", str(dataset), "--detections", str(detections),
            "-o", str(manifest))
    out_dir = tmp_path / "crops"
    assert adapter_run(["crops", "--manifest", str(manifest),
                        "--images-root", str(images_root),
                        "--dataset", str(dataset), "--out-dir", str(out_dir)]) == 0
    crop = np.asarray(Image.open(out_dir / "crop_000001.png"))
    assert crop.shape == (60, 80, 3)  # exactly the manifest region
