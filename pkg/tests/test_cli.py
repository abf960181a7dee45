import json

from litterkit.cli import run
from litterkit.formats import load
from litterkit.model import validate


def write(path, obj):
    path.write_text(json.dumps(obj), encoding="utf-8")
    return str(path)


def drinking_waste_inputs(tmp_path):
    labels = tmp_path / "labels"
    labels.mkdir()
    lines = {
        "img1": "0 0.5 0.5 0.2 0.2\n",
        "img2": "1 0.5 0.5 0.4 0.4\n2 0.25 0.25 0.1 0.1\n",
        "img3": "3 0.5 0.5 0.3 0.3\n",
    }
    for stem, text in lines.items():
        (labels / f"{stem}.txt").write_text(text, encoding="utf-8")
    dims = write(
        tmp_path / "dims.json",
        {stem: [512, 683] for stem in lines},
    )
    classes = tmp_path / "classes.txt"
    classes.write_text("Aluminium Cans\nGlass bottles\nPET bottles\nHDPE\n", encoding="utf-8")
    return str(labels), dims, str(classes)


def test_ingest_yolo_and_stats_class_count(tmp_path, capsys):
    labels, dims, classes = drinking_waste_inputs(tmp_path)
    out = tmp_path / "drink.json"
    code = run([
        "ingest", "--format", "yolo", "-i", labels, "--dims", dims,
        "--classes", classes, "--source", "drinking_waste", "-o", str(out),
    ])
    assert code == 0
    ds = load(out.read_text(encoding="utf-8"))
    assert len(ds.categories) == 4
    assert validate(ds) == []

    assert run(["stats", "-i", str(out)]) == 0
    stats_obj = json.loads(capsys.readouterr().out)
    assert stats_obj["category_count"] == 4


def test_split_byte_identical_across_runs(tmp_path):
    labels, dims, classes = drinking_waste_inputs(tmp_path)
    ds_path = tmp_path / "ds.json"
    run([
        "ingest", "--format", "yolo", "-i", labels, "--dims", dims,
        "--classes", classes, "-o", str(ds_path),
    ])
    out_a, out_b = tmp_path / "a.json", tmp_path / "b.json"
    for out in (out_a, out_b):
        code = run([
            "split", "-i", str(ds_path), "--ratio", "0.8", "--seed", "42",
            "-o", str(out),
        ])
        assert code == 0
    assert out_a.read_bytes() == out_b.read_bytes()


def coco_fixture(tmp_path, split="test"):
    doc = {
        "images": [
            {"id": 1, "file_name": "a.jpg", "width": 400, "height": 400,
             "split": split, "source_dataset": "s"},
        ],
        "annotations": [
            {"id": 1, "image_id": 1, "category_id": 1, "bbox": [10, 10, 50, 50],
             "area": 2500.0, "is_pseudo": False, "source_dataset": "s"},
            {"id": 2, "image_id": 1, "category_id": 1, "bbox": [200, 200, 120, 120],
             "area": 14400.0, "is_pseudo": False, "source_dataset": "s"},
        ],
        "categories": [{"id": 1, "name": "litter", "source_dataset": "s"}],
        "provenance": ["s"],
    }
    return write(tmp_path / "dataset.json", doc)


def test_eval_det_perfect_predictions(tmp_path, capsys):
    ds_path = coco_fixture(tmp_path)
    preds = [
        {"image_id": 1, "category_id": 1, "bbox": [10, 10, 50, 50], "score": 0.9},
        {"image_id": 1, "category_id": 1, "bbox": [200, 200, 120, 120], "score": 0.8},
    ]
    pred_path = write(tmp_path / "preds.json", preds)
    assert run(["eval-det", "-i", ds_path, "--detections", pred_path,
                "--preset", "coco"]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["map_50_95"] == 1.0
    assert summary["ap_50"] == 1.0
    assert summary["ap_small"] == -1.0  # no small ground truth in the fixture
    assert summary["ap_medium"] == 1.0
    assert summary["ap_large"] == 1.0


def test_eval_det_pr_csv(tmp_path):
    ds_path = coco_fixture(tmp_path)
    pred_path = write(
        tmp_path / "preds.json",
        [{"image_id": 1, "category_id": 1, "bbox": [10, 10, 50, 50], "score": 0.9}],
    )
    csv_path = tmp_path / "pr.csv"
    assert run(["eval-det", "-i", ds_path, "--detections", pred_path,
                "--iou", "0.5", "--pr-csv", str(csv_path), "-o",
                str(tmp_path / "summary.json")]) == 0
    lines = csv_path.read_text(encoding="utf-8").strip().splitlines()
    assert lines[0] == "class,iou,score,recall,precision"
    assert len(lines) == 2


def test_eval_cls_report(tmp_path, capsys):
    truth = write(
        tmp_path / "truth.json",
        [{"crop_id": 1, "label": "glass"}, {"crop_id": 2, "label": "glass"}],
    )
    preds = write(
        tmp_path / "preds.json",
        [
            {"crop_id": 1, "label": "glass", "score": 0.9},
            {"crop_id": 2, "label": "paper", "score": 0.8},
        ],
    )
    assert run(["eval-cls", "--truth", truth, "--predictions", preds]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["accuracy"] == 0.5
    assert rep["confusion"]["classes"] == ["glass", "paper"]


def test_pipeline_map_merge_collapse_validate(tmp_path, capsys):
    doc = {
        "images": [{"id": 1, "file_name": "t.jpg", "width": 512, "height": 384}],
        "annotations": [
            {"id": 1, "image_id": 1, "category_id": 1, "bbox": [0, 0, 512, 384]}
        ],
        "categories": [{"id": 1, "name": "glass"}],
    }
    raw = write(tmp_path / "trashnet_raw.json", doc)
    ingested = tmp_path / "trashnet.json"
    assert run(["ingest", "--format", "coco", "-i", raw, "--source", "trashnet",
                "-o", str(ingested)]) == 0

    tax = write(
        tmp_path / "tax.json",
        {"default": None,
         "entries": [{"source": "trashnet", "category": "glass", "target": "glass"}]},
    )
    mapped = tmp_path / "mapped.json"
    assert run(["map", "-i", str(ingested), "--taxonomy", tax, "-o", str(mapped)]) == 0

    merged = tmp_path / "merged.json"
    assert run(["merge", "-i", str(mapped), "-i", str(mapped), "-o", str(merged)]) == 0
    ds = load(merged.read_text(encoding="utf-8"))
    assert len(ds.images) == 2

    collapsed = tmp_path / "collapsed.json"
    assert run(["collapse", "-i", str(merged), "-o", str(collapsed)]) == 0
    ds = load(collapsed.read_text(encoding="utf-8"))
    assert [c.name for c in ds.categories] == ["litter"]

    assert run(["validate", "-i", str(collapsed)]) == 0
    assert json.loads(capsys.readouterr().out) == []


def test_crops_and_compose(tmp_path, capsys):
    ds_path = coco_fixture(tmp_path)
    dets = [
        {"image_id": 1, "category_id": 1, "bbox": [10, 10, 50, 50], "score": 0.9},
        {"image_id": 1, "category_id": 1, "bbox": [200, 200, 120, 120], "score": 0.8},
    ]
    det_path = write(tmp_path / "dets.json", dets)
    manifest = tmp_path / "crops.json"
    assert run(["crops", "-i", ds_path, "--detections", det_path,
                "--margin", "0.1", "-o", str(manifest)]) == 0
    crops = json.loads(manifest.read_text(encoding="utf-8"))
    assert [c["crop_id"] for c in crops] == [1, 2]
    assert crops[0]["region"] == [5.0, 5.0, 60.0, 60.0]

    cls = write(
        tmp_path / "cls.json",
        [
            {"crop_id": 1, "label": "glass", "score": 0.95},
            {"crop_id": 2, "label": "background", "score": 0.99},
        ],
    )
    assert run(["compose", "--detections", det_path, "--crops", str(manifest),
                "--predictions", cls]) == 0
    composed = json.loads(capsys.readouterr().out)
    assert len(composed) == 1
    assert composed[0]["label"] == "glass"
    assert composed[0]["score"] == 0.9


def test_pseudo_label_workflow(tmp_path):
    pool = write(tmp_path / "pool.json", [10, 11, 12])
    labeled = write(tmp_path / "labeled.json", [{"crop_id": 1, "label": "glass"}])
    round1 = write(
        tmp_path / "round1.json",
        {"round_index": 1, "epoch": 1, "predictions": [
            {"crop_id": 10, "label": "paper", "score": 0.9},
            {"crop_id": 11, "label": "bio", "score": 0.2},
        ]},
    )
    state_out = tmp_path / "state.json"
    view_out = tmp_path / "view.json"
    weights_out = tmp_path / "weights.json"
    assert run([
        "pseudo-label", "--init", "--pool", pool, "--labeled", labeled,
        "--threshold", "0.5", "--mode", "per-epoch", "--round", round1,
        "-o", str(state_out), "--view", str(view_out), "--weights", str(weights_out),
    ]) == 0
    state = json.loads(state_out.read_text(encoding="utf-8"))
    assert state["assigned"] == {"10": {"label": "paper", "round_index": 1, "score": 0.9}}
    view = json.loads(view_out.read_text(encoding="utf-8"))
    assert view == {"1": "glass", "10": "paper"}
    weights = json.loads(weights_out.read_text(encoding="utf-8"))
    assert weights == {"1": 1.0, "10": 1.0}

    # resume from the snapshot with a second round
    round2 = write(
        tmp_path / "round2.json",
        {"round_index": 2, "epoch": 2, "predictions": [
            {"crop_id": 11, "label": "bio", "score": 0.8},
        ]},
    )
    state2_out = tmp_path / "state2.json"
    assert run(["pseudo-label", "--state", str(state_out), "--round", round2,
                "-o", str(state2_out)]) == 0
    state2 = json.loads(state2_out.read_text(encoding="utf-8"))
    assert set(state2["assigned"]) == {"10", "11"}


def test_usage_errors_exit_1(capsys):
    assert run(["frobnicate"]) == 1
    assert run([]) == 1
    assert run(["split", "-i", "x.json", "--ratio", "1.5"]) == 1
    capsys.readouterr()


def test_data_errors_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json", encoding="utf-8")
    assert run(["stats", "-i", str(bad)]) == 2
    missing = write(tmp_path / "missing.json", {"images": [], "annotations": []})
    assert run(["stats", "-i", missing]) == 2
    capsys.readouterr()


def test_meta_goes_to_stderr_not_stdout(tmp_path, capsys):
    ds_path = coco_fixture(tmp_path)
    assert run(["stats", "-i", ds_path, "--meta"]) == 0
    captured = capsys.readouterr()
    assert "litterkit" in captured.err
    json.loads(captured.out)  # stdout still pure JSON
