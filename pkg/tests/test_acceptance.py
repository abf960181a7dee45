"""Acceptance suite: one test per release criterion, at stated tolerances.

Each test prints a PASS line on success so a verbose run reads as a
checklist. Run with `pytest tests/test_acceptance.py -v -s`.
"""

import math
import random
import time
from collections import Counter

import numpy as np
import pytest

from litterkit.classification_metrics import ConfusionMatrix, report
from litterkit.curate import SplitSpec, merge, split
from litterkit.detection_metrics import (
    COCO_THRESHOLDS,
    average_precision,
    evaluate,
    iou,
    summary_to_json_obj,
)
from litterkit.formats import emit, load
from litterkit.model import (
    AnnotationRecord,
    BBox,
    CategoryDef,
    ClassPrediction,
    Dataset,
    DetectionRecord,
    ImageRecord,
    validate,
)
from litterkit.pseudolabel import (
    PseudoLabelState,
    Round,
    replay,
    sampler_weights,
    training_view,
)
from litterkit.taxonomy import collapse_to_single_class

import reference_impl
from generators import (
    as_plain,
    counted_fixture,
    random_dataset,
    random_detections,
)

GRID_101 = [i / 100 for i in range(101)]

SUMMARY_FIELDS = ("map_50_95", "ap_50", "ap_75", "ap_small", "ap_medium", "ap_large")


def _pass(line: str) -> None:
    print(f"PASS: {line}")


def test_detection_metric_oracle_equivalence():
    """evaluate == brute-force reference on 1000 random instances, 1e-9."""
    rng = random.Random(20240817)
    started = time.perf_counter()
    for i in range(1000):
        dataset = random_dataset(
            rng,
            max_images=20,
            max_annotations=10,
            n_classes=rng.randint(1, 7),
            scramble_area=True,
        )
        detections = random_detections(rng, dataset, max_detections=30)
        summary = summary_to_json_obj(evaluate(detections, dataset, COCO_THRESHOLDS))
        expected = reference_impl.evaluate(
            *as_plain(dataset, detections), COCO_THRESHOLDS, GRID_101
        )
        for key in SUMMARY_FIELDS:
            assert summary[key] == pytest.approx(expected[key], abs=1e-9), (i, key)
        assert set(summary.get("per_class", {})) == set(expected["per_class"])
        for name, sub in expected["per_class"].items():
            for key in SUMMARY_FIELDS:
                assert summary["per_class"][name][key] == pytest.approx(
                    sub[key], abs=1e-9
                ), (i, name, key)
    elapsed = time.perf_counter() - started
    assert elapsed < 60.0, f"oracle equivalence took {elapsed:.1f}s"
    _pass(
        "detection-metric oracle equivalence on 1000 randomized instances "
        f"(1e-9, {elapsed:.1f}s)"
    )


def test_ap_staircase_fixture():
    """TP/FP/TP over 2 GT gives the hand-enumerated 101-point AP ~ 0.8350."""
    gts = [
        AnnotationRecord(id=1, image_id=1, category_id=1, bbox=BBox(0, 0, 10, 10), area=100),
        AnnotationRecord(id=2, image_id=1, category_id=1, bbox=BBox(100, 100, 10, 10), area=100),
    ]
    dets = [
        DetectionRecord(image_id=1, category_id=1, bbox=BBox(0, 0, 10, 10), score=0.9),
        DetectionRecord(image_id=1, category_id=1, bbox=BBox(50, 50, 10, 10), score=0.8),
        DetectionRecord(image_id=1, category_id=1, bbox=BBox(100, 100, 10, 10), score=0.7),
    ]
    # staircase: (recall, precision) = (0.5, 1.0), (0.5, 0.5), (1.0, 2/3)
    points = [(0.5, 1.0), (0.5, 0.5), (1.0, 2 / 3)]
    expected = sum(
        max((p for r, p in points if r >= g), default=0.0) for g in GRID_101
    ) / len(GRID_101)
    got = average_precision(dets, gts, 0.5)
    assert got == pytest.approx(0.8350, abs=1e-4)
    assert got == pytest.approx(expected, abs=1e-12)
    _pass(f"AP staircase fixture = {got:.6f} (~0.8350 within 1e-4)")


def test_iou_exactness_against_raster_oracle():
    """Closed-form IoU matches unit-cell rasterization on 10k integer boxes."""
    rng = random.Random(31337)
    for _ in range(10_000):
        a = (rng.randint(0, 30), rng.randint(0, 30), rng.randint(0, 20), rng.randint(0, 20))
        b = (rng.randint(0, 30), rng.randint(0, 30), rng.randint(0, 20), rng.randint(0, 20))
        got = iou(BBox(*a), BBox(*b))
        want = reference_impl.raster_iou(a, b)
        assert got == pytest.approx(want, abs=1e-12), (a, b)
    _pass("IoU equals integer-grid rasterization oracle on 10000 boxes (1e-12)")


# Published per-class rows as integer matrices whose precision, recall, AND
# f1 all reproduce the table digits at 2 decimals (see test_classification_
# metrics for the derivation; the glass row needs unrounded-consistent counts).
PUBLISHED_ROWS = [
    ("background", 97, 100, 100, 0.97, 0.97, 0.97),
    ("bio", 3162, 5100, 6200, 0.62, 0.51, 0.56),
    ("glass", 834, 1000, 1012, 0.83, 0.82, 0.83),
    ("metals_and_plastic", 6090, 7000, 8700, 0.87, 0.70, 0.78),
    ("non_recyclable", 3380, 6500, 5200, 0.52, 0.65, 0.58),
    ("other", 5254, 7400, 7100, 0.71, 0.74, 0.72),
    ("paper", 4712, 7600, 6200, 0.62, 0.76, 0.68),
    ("unknown", 3380, 6500, 5200, 0.52, 0.65, 0.58),
]


def test_f1_identity_on_published_rows():
    for name, tp, col, row, p, r, f1 in PUBLISHED_ROWS:
        other = "unknown" if name != "unknown" else "other"
        matrix = ConfusionMatrix(
            classes=(name, other),
            counts=((tp, row - tp), (col - tp, 50)),
        )
        metrics = report(matrix).per_class[name]
        assert round(metrics.precision, 2) == p, name
        assert round(metrics.recall, 2) == r, name
        assert round(metrics.f1, 2) == f1, name
    _pass("F1 identity holds on all 8 published precision/recall rows")


def test_merge_conservation_on_published_counts():
    rows = [
        ("wade_ai", 1396, 2247),
        ("uavvaste", 772, 3718),
        ("extended_taco", 4562, 14286),
        ("trashcan", 7212, 6214),
        ("trash_icra19", 7668, 6706),
        ("drinking_waste", 4810, 5058),
        ("mju_waste", 2475, 2532),
        ("cigarette_butt", 2200, 2200),
    ]
    datasets = [counted_fixture(name, images, anns) for name, images, anns in rows]
    merged = merge(datasets)
    assert len(merged.images) == sum(images for _, images, _ in rows) == 31095
    assert len(merged.annotations) == sum(anns for _, _, anns in rows) == 42961
    assert validate(merged) == []

    taco = counted_fixture(
        "extended_taco", 4562, 14286,
        class_names=("bio", "glass", "metals_and_plastic", "non_recyclable",
                     "other", "paper", "unknown"),
    )
    collapsed = collapse_to_single_class(taco)
    assert len(collapsed.annotations) == 14286
    assert [c.name for c in collapsed.categories] == ["litter"]
    _pass("merge conserves published image/instance totals; collapse keeps 14286")


def _expected_train(n: int, fraction: float = 0.8) -> int:
    return min(n, max(1, math.floor(fraction * n + 0.5)))


def _strata(dataset: Dataset) -> dict[str, list[int]]:
    """Independent stratum computation: dominant class name per image."""
    names = {c.id: c.name for c in dataset.categories}
    by_image: dict[int, list[str]] = {}
    for ann in dataset.annotations:
        by_image.setdefault(ann.image_id, []).append(names[ann.category_id])
    strata: dict[str, list[int]] = {}
    for image in dataset.images:
        labels = by_image.get(image.id)
        if not labels:
            key = ""
        else:
            counts = Counter(labels)
            key = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[0][0]
        strata.setdefault(key, []).append(image.id)
    return strata


def test_split_properties_500_randomized():
    rng = random.Random(77)
    for i in range(500):
        dataset = random_dataset(rng, max_images=25, max_annotations=40,
                                 assign_splits=False)
        seed = rng.randrange(2 ** 63)
        spec = SplitSpec(train_fraction=0.8, seed=seed, stratify_by="category")
        out = split(dataset, spec)

        assignment = {im.id: im.split for im in out.images}
        assert set(assignment.values()) <= {"train", "test"}
        assert set(assignment) == {im.id for im in dataset.images}

        for key, members in _strata(dataset).items():
            trained = sum(1 for image_id in members if assignment[image_id] == "train")
            assert trained == _expected_train(len(members)), (i, key)

        # reproducible under the seed, invariant to presentation order
        again = split(dataset, spec)
        assert {im.id: im.split for im in again.images} == assignment
        shuffled_images = list(dataset.images)
        rng.shuffle(shuffled_images)
        shuffled_anns = list(dataset.annotations)
        rng.shuffle(shuffled_anns)
        permuted = split(
            Dataset(shuffled_images, shuffled_anns, dataset.categories), spec
        )
        assert {im.id: im.split for im in permuted.images} == assignment
    _pass("split: exact per-stratum counts, partition, determinism on 500 datasets")


def test_roundtrip_500_randomized():
    rng = random.Random(99)
    for _ in range(500):
        dataset = random_dataset(rng, scramble_area=True)
        text = emit(dataset)
        loaded = load(text)
        assert loaded == dataset
        assert emit(loaded) == text
    _pass("load(emit(D)) identity and byte-stable emit on 500 datasets")


def test_pseudolabel_replay_200_histories_and_published_histogram():
    rng = random.Random(55)
    for _ in range(200):
        n_items = rng.randint(5, 40)
        pool = frozenset(range(100, 100 + n_items))
        labeled = {1: "glass", 2: "paper"}
        threshold = rng.choice((0.3, 0.5, 0.7))
        rounds = []
        waste = ("bio", "glass", "metals_and_plastic", "non_recyclable",
                 "other", "paper", "unknown")
        for index in range(1, rng.randint(1, 5) + 1):
            preds = tuple(
                ClassPrediction(crop_id=cid, label=rng.choice(waste),
                                score=round(rng.random(), 3))
                for cid in rng.sample(sorted(pool), rng.randint(0, n_items))
            )
            rounds.append(Round(round_index=index, epoch=index, predictions=preds))
        state = PseudoLabelState(labeled=labeled, pool=pool, threshold=threshold)
        states = replay(state, rounds)
        final = states[-1] if states else state
        expected = reference_impl.replay_final_assignments(
            pool, threshold, "per_batch",
            [(r.round_index, [(p.crop_id, p.label, p.score) for p in r.predictions])
             for r in rounds],
        )
        got = {cid: (a.label, a.score, a.round_index) for cid, a in final.assigned.items()}
        assert got == expected
        for s in states:
            assert dict(s.labeled) == labeled

    published = {
        "glass": 3136,
        "metals_and_plastic": 29219,
        "non_recyclable": 1971,
        "other": 900,
        "paper": 819,
        "unknown": 19701,
    }
    total = sum(published.values())
    assert total == 55746
    predictions = []
    crop_id = 1000
    for label, count in published.items():
        for _ in range(count):
            predictions.append(ClassPrediction(crop_id=crop_id, label=label, score=0.9))
            crop_id += 1
    pool = frozenset(range(1000, 1000 + total))
    human = {1: "glass", 2: "glass", 3: "bio"}
    state = PseudoLabelState(labeled=human, pool=pool, threshold=0.5)
    state = replay(state, [Round(round_index=0, epoch=0, predictions=tuple(predictions))])[-1]
    histogram = Counter(training_view(state).values())
    assert histogram == Counter(
        {**published, "glass": published["glass"] + 2, "bio": 1}
    )
    _pass("pseudo-label replay matches brute force on 200 histories; "
          "pre-assignment histogram reproduces published totals exactly")


def test_sampler_uniformity_monte_carlo():
    # 90% / 10% two-class pool
    weights = sampler_weights({i: ("glass" if i < 900 else "paper") for i in range(1000)})
    items = np.array(sorted(weights))
    probs = np.array([weights[i] for i in items])
    probs = probs / probs.sum()
    rng = np.random.default_rng(4242)
    draws = rng.choice(items, size=1_000_000, p=probs)
    freq_majority = float(np.mean(draws < 900))
    assert abs(freq_majority - 0.5) <= 0.005
    _pass(f"weighted sampler: majority-class frequency {freq_majority:.4f} = 0.50 +/- 0.005")


def test_performance_budgets():
    rng = random.Random(1)
    n_images, n_gt, n_det, n_cls = 200, 2000, 10000, 7
    images = [
        ImageRecord(id=i, file_name=f"{i}.jpg", width=800, height=800, split="test")
        for i in range(1, n_images + 1)
    ]
    cats = [CategoryDef(id=c, name=f"c{c}") for c in range(1, n_cls + 1)]
    anns = []
    for j in range(1, n_gt + 1):
        w, h = rng.uniform(5, 200), rng.uniform(5, 200)
        anns.append(
            AnnotationRecord(
                id=j, image_id=rng.randint(1, n_images),
                category_id=rng.randint(1, n_cls),
                bbox=BBox(rng.uniform(0, 800 - w), rng.uniform(0, 800 - h), w, h),
                area=w * h,
            )
        )
    dataset = Dataset(images, anns, cats)
    dets = []
    for _ in range(n_det):
        if rng.random() < 0.7:
            a = rng.choice(anns)
            b = a.bbox
            dets.append(
                DetectionRecord(
                    image_id=a.image_id, category_id=a.category_id,
                    bbox=BBox(max(b.x - 2, 0), max(b.y - 2, 0), b.w, b.h),
                    score=rng.random(),
                )
            )
        else:
            w, h = rng.uniform(5, 150), rng.uniform(5, 150)
            dets.append(
                DetectionRecord(
                    image_id=rng.randint(1, n_images),
                    category_id=rng.randint(1, n_cls),
                    bbox=BBox(rng.uniform(0, 800 - w), rng.uniform(0, 800 - h), w, h),
                    score=rng.random(),
                )
            )
    started = time.perf_counter()
    evaluate(dets, dataset, COCO_THRESHOLDS)
    eval_elapsed = time.perf_counter() - started
    assert eval_elapsed < 1.0, f"evaluate took {eval_elapsed:.2f}s"

    half_a = counted_fixture("bulk_a", 10000, 12000)
    half_b = counted_fixture("bulk_b", 10000, 12000)
    started = time.perf_counter()
    merged = merge([half_a, half_b])
    split(merged, SplitSpec(train_fraction=0.8, seed=3))
    curate_elapsed = time.perf_counter() - started
    assert curate_elapsed < 2.0, f"merge+split took {curate_elapsed:.2f}s"
    _pass(
        f"performance: evaluate 10k/2k/7cls in {eval_elapsed:.2f}s (<1s); "
        f"merge+split 20k images in {curate_elapsed:.2f}s (<2s)"
    )
