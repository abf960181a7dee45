"""Detection metric suite: IoU, greedy matching, AP, and summary tables.

Average precision follows the 101-point interpolation convention at every
IoU threshold: detections are ranked by score (ties broken by input
order), matched greedily per image and class to the unmatched ground
truth with highest IoU at or above the threshold, and the interpolated
precision max(p(r') : r' >= r) is averaged over the recall grid
{0.00, 0.01, ..., 1.00}. An 11-point grid ({0.0, 0.1, ..., 1.0}) is
available for comparison against older reporting styles.

Size-restricted AP keeps only ground truth of the requested bucket as
matchable-and-counted; out-of-bucket ground truth can still absorb a
detection, which is then ignored (excluded from the ranking) instead of
penalized as a false positive. There is no cap on detections per image.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .model import (
    AnnotationRecord,
    BBox,
    Dataset,
    DetectionRecord,
    ParseError,
    SchemaError,
)

SMALL_AREA_MAX = 32 ** 2
MEDIUM_AREA_MAX = 96 ** 2

COCO_THRESHOLDS = tuple(round(0.5 + 0.05 * i, 2) for i in range(10))
PRESETS = {
    "voc50": (0.50,),
    "voc75": (0.75,),
    "coco": COCO_THRESHOLDS,
}

_GRID_101 = tuple(i / 100 for i in range(101))
_GRID_11 = tuple(i / 10 for i in range(11))
_BUCKETS = ("small", "medium", "large")
_RANGES = ("all",) + _BUCKETS


def iou(a: BBox, b: BBox) -> float:
    """Intersection over union of two boxes; 0.0 when the union is empty."""
    if a == b:
        return 1.0 if a.area() > 0 else 0.0
    ix = min(a.x + a.w, b.x + b.w) - max(a.x, b.x)
    iy = min(a.y + a.h, b.y + b.h) - max(a.y, b.y)
    if ix <= 0 or iy <= 0:
        inter = 0.0
    else:
        inter = ix * iy
    union = a.area() + b.area() - inter
    if union <= 0:
        return 0.0
    # corner arithmetic can overshoot by an ulp; keep the [0, 1] contract
    return min(inter / union, 1.0)


def bucket(area: float) -> str:
    """Size bucket for an instance area: small < 32^2 <= medium < 96^2 <= large."""
    if area < 0:
        raise ValueError("area must be non-negative")
    if area < SMALL_AREA_MAX:
        return "small"
    if area < MEDIUM_AREA_MAX:
        return "medium"
    return "large"


def check_thresholds(values: Iterable[float]) -> tuple[float, ...]:
    out = tuple(float(v) for v in values)
    if not out:
        raise ValueError("at least one IoU threshold is required")
    for v in out:
        if not 0.0 < v <= 1.0:
            raise ValueError(f"IoU thresholds must lie in (0, 1], got {v}")
    if any(b <= a for a, b in zip(out, out[1:])):
        raise ValueError("IoU thresholds must be strictly increasing")
    return out


def match(
    detections: Sequence[DetectionRecord],
    ground_truth: Sequence[AnnotationRecord],
    iou_threshold: float,
    *,
    ignored_gt_ids: frozenset[int] = frozenset(),
) -> list[tuple[DetectionRecord, Optional[AnnotationRecord]]]:
    """Greedy detection-to-ground-truth matching for one image/class slice.

    Detections are processed in descending score order (ties by input
    position); each takes the unmatched ground truth with highest IoU at
    or above the threshold, preferring non-ignored candidates, and each
    ground truth is matched at most once. Pairs are returned in
    processing order; unmatched detections pair with None.
    """
    order = sorted(range(len(detections)), key=lambda i: -detections[i].score)
    taken = [False] * len(ground_truth)
    pairs: list[tuple[DetectionRecord, Optional[AnnotationRecord]]] = []
    for di in order:
        det = detections[di]
        best = -1
        best_iou = -1.0
        fallback = -1
        fallback_iou = -1.0
        for gi, gt in enumerate(ground_truth):
            if taken[gi]:
                continue
            overlap = iou(det.bbox, gt.bbox)
            if overlap < iou_threshold:
                continue
            if gt.id in ignored_gt_ids:
                if overlap > fallback_iou:
                    fallback, fallback_iou = gi, overlap
            elif overlap > best_iou:
                best, best_iou = gi, overlap
        chosen = best if best >= 0 else fallback
        if chosen >= 0:
            taken[chosen] = True
            pairs.append((det, ground_truth[chosen]))
        else:
            pairs.append((det, None))
    return pairs


def _grid(interpolation: str) -> tuple[float, ...]:
    if interpolation == "101pt":
        return _GRID_101
    if interpolation == "11pt":
        return _GRID_11
    raise ValueError(f"interpolation must be '101pt' or '11pt', got {interpolation!r}")


def _ap_from_curve(recall: np.ndarray, precision: np.ndarray, grid) -> float:
    if len(recall) == 0:
        return 0.0
    # max precision at recall >= r, vectorized as a right-to-left running max
    pmax = np.maximum.accumulate(precision[::-1])[::-1]
    idx = np.searchsorted(recall, np.asarray(grid), side="left")
    vals = np.where(idx < len(pmax), pmax[np.minimum(idx, len(pmax) - 1)], 0.0)
    return float(vals.mean())


def average_precision(
    detections: Sequence[DetectionRecord],
    ground_truth: Sequence[AnnotationRecord],
    iou_threshold: float,
    *,
    interpolation: str = "101pt",
) -> float:
    """AP for one class slice spanning many images; -1.0 when no ground truth.

    Matching runs per image via `match`; the precision/recall curve is
    accumulated over all detections ranked by score.
    """
    grid = _grid(interpolation)
    if not ground_truth:
        return -1.0
    gt_by_image: dict[int, list[AnnotationRecord]] = {}
    for gt in ground_truth:
        gt_by_image.setdefault(gt.image_id, []).append(gt)
    det_by_image: dict[int, list[tuple[int, DetectionRecord]]] = {}
    for i, det in enumerate(detections):
        det_by_image.setdefault(det.image_id, []).append((i, det))

    matched_flags: dict[int, bool] = {}
    for image_id, indexed in det_by_image.items():
        pairs = match(
            [d for _, d in indexed], gt_by_image.get(image_id, []), iou_threshold
        )
        # match() preserves the score ordering we fed it; map back by identity
        order = sorted(range(len(indexed)), key=lambda k: -indexed[k][1].score)
        for k, (_, gt) in zip(order, pairs):
            matched_flags[indexed[k][0]] = gt is not None

    ranked = sorted(range(len(detections)), key=lambda i: -detections[i].score)
    tp = np.cumsum([1 if matched_flags[i] else 0 for i in ranked])
    if len(tp) == 0:
        return 0.0
    k = np.arange(1, len(tp) + 1)
    recall = tp / len(ground_truth)
    precision = tp / k
    return _ap_from_curve(recall, precision, grid)


@dataclass(frozen=True)
class EvalSummary:
    """Headline detection metrics; -1.0 marks slices with no ground truth."""

    map_50_95: float
    ap_50: float
    ap_75: float
    ap_small: float
    ap_medium: float
    ap_large: float
    per_class: Mapping[str, "EvalSummary"] = field(default_factory=dict)


class _ClassGroups:
    """Per-image matching state for one class: IoU tables and candidates."""

    __slots__ = ("det_scores", "det_order", "groups", "gt_buckets", "n_gt")

    def __init__(self, dets: list[DetectionRecord], gts: list[AnnotationRecord]):
        # global ranking by (-score, input order); stable sort keeps input order
        self.det_order = sorted(range(len(dets)), key=lambda i: -dets[i].score)
        rank_of = {di: r for r, di in enumerate(self.det_order)}

        gt_by_image: dict[int, list[int]] = {}
        for gi, gt in enumerate(gts):
            gt_by_image.setdefault(gt.image_id, []).append(gi)
        det_by_image: dict[int, list[int]] = {}
        for di in self.det_order:  # already score-ranked
            det_by_image.setdefault(dets[di].image_id, []).append(di)

        self.gt_buckets = [bucket(gt.area) for gt in gts]
        self.n_gt = len(gts)
        self.groups = []
        for image_id in set(gt_by_image) | set(det_by_image):
            d_idx = det_by_image.get(image_id, [])
            g_idx = gt_by_image.get(image_id, [])
            if g_idx and d_idx:
                db = np.array([dets[i].bbox.as_list() for i in d_idx], dtype=np.float64)
                gb = np.array([gts[i].bbox.as_list() for i in g_idx], dtype=np.float64)
                ious = _iou_matrix(db, gb)
                # candidate ground truths per detection, best overlap first;
                # stable argsort keeps earlier ground truth on exact ties
                cands = [np.argsort(-ious[r], kind="stable") for r in range(len(d_idx))]
            else:
                ious = np.zeros((len(d_idx), len(g_idx)))
                cands = [np.empty(0, dtype=int)] * len(d_idx)
            ranks = [rank_of[i] for i in d_idx]
            self.groups.append((ranks, d_idx, g_idx, ious, cands))

    def statuses(self, threshold: float, size_range: str) -> tuple[np.ndarray, int]:
        """Per-detection status in rank order (1 tp / 0 fp / -1 ignored) + #GT."""
        status = np.zeros(len(self.det_order), dtype=np.int8)
        if size_range == "all":
            n_pos = self.n_gt
        else:
            n_pos = sum(1 for b in self.gt_buckets if b == size_range)
        for ranks, _d_idx, g_idx, ious, cands in self.groups:
            taken = [False] * len(g_idx)
            ignored = (
                [False] * len(g_idx)
                if size_range == "all"
                else [self.gt_buckets[gi] != size_range for gi in g_idx]
            )
            for row, rank in enumerate(ranks):
                best = -1
                fallback = -1
                for col in cands[row]:
                    overlap = ious[row, col]
                    if overlap < threshold:
                        break
                    if taken[col]:
                        continue
                    if ignored[col]:
                        if fallback < 0:
                            fallback = col
                        continue
                    best = col
                    break
                if best >= 0:
                    taken[best] = True
                    status[rank] = 1
                elif fallback >= 0:
                    taken[fallback] = True
                    status[rank] = -1
                # else: stays 0 (false positive)
        return status, n_pos


def _iou_matrix(dets: np.ndarray, gts: np.ndarray) -> np.ndarray:
    dx1, dy1 = dets[:, 0:1], dets[:, 1:2]
    dx2, dy2 = dx1 + dets[:, 2:3], dy1 + dets[:, 3:4]
    gx1, gy1 = gts[:, 0], gts[:, 1]
    gx2, gy2 = gx1 + gts[:, 2], gy1 + gts[:, 3]
    iw = np.minimum(dx2, gx2[None, :]) - np.maximum(dx1, gx1[None, :])
    ih = np.minimum(dy2, gy2[None, :]) - np.maximum(dy1, gy1[None, :])
    inter = np.where((iw > 0) & (ih > 0), iw * ih, 0.0)
    d_area = (dets[:, 2] * dets[:, 3])[:, None]
    g_area = gts[:, 2] * gts[:, 3]
    union = d_area + g_area[None, :] - inter
    out = np.zeros_like(inter)
    np.divide(inter, union, out=out, where=union > 0)
    return out


def _ap_from_status(status: np.ndarray, n_pos: int, grid) -> float:
    if n_pos == 0:
        return -1.0
    valid = status >= 0
    if not valid.any():
        return 0.0
    flags = status[valid]
    tp = np.cumsum(flags == 1)
    k = np.arange(1, len(tp) + 1)
    return _ap_from_curve(tp / n_pos, tp / k, grid)


def _mean_defined(values: Iterable[float]) -> float:
    defined = [v for v in values if v != -1.0]
    if not defined:
        return -1.0
    return float(sum(defined) / len(defined))


def evaluate(
    detections: Sequence[DetectionRecord],
    dataset: Dataset,
    thresholds: Iterable[float] = COCO_THRESHOLDS,
    *,
    interpolation: str = "101pt",
) -> EvalSummary:
    """Full metric summary over the dataset's evaluation images.

    Evaluation is restricted to images with split="test"; a dataset with
    no test images (fresh from ingest) is evaluated over all images.
    mAP fields average per-class AP over the supplied thresholds; ap_50
    and ap_75 are always reported at IoU 0.50 / 0.75. Size-bucket fields
    restrict ground truth to the bucket as described in the module notes.
    """
    thresholds = check_thresholds(thresholds)
    grid = _grid(interpolation)
    images = dataset.image_index()
    names = [c.name for c in dataset.categories]
    if len(set(names)) != len(names):
        raise SchemaError("duplicate category names in dataset")
    for det in detections:
        if det.image_id not in images:
            raise SchemaError(f"detection references unknown image {det.image_id}")

    eval_ids = {im.id for im in dataset.images if im.split == "test"}
    if not eval_ids:
        eval_ids = set(images)

    all_thresholds = tuple(sorted(set(thresholds) | {0.50, 0.75}))
    cats = sorted(dataset.categories, key=lambda c: c.id)

    # ap[name][threshold][range]
    ap: dict[str, dict[float, dict[str, float]]] = {}
    for cat in cats:
        gts = [
            a
            for a in dataset.annotations
            if a.category_id == cat.id and a.image_id in eval_ids
        ]
        dets = [
            d
            for d in detections
            if d.category_id == cat.id and d.image_id in eval_ids
        ]
        groups = _ClassGroups(dets, gts)
        table: dict[float, dict[str, float]] = {}
        for t in all_thresholds:
            row: dict[str, float] = {}
            for size_range in _RANGES:
                status, n_pos = groups.statuses(t, size_range)
                row[size_range] = _ap_from_status(status, n_pos, grid)
            table[t] = row
        ap[cat.name] = table

    def slice_summary(names: Sequence[str]) -> dict[str, float]:
        return {
            "map_50_95": _mean_defined(
                ap[n][t]["all"] for n in names for t in thresholds
            ),
            "ap_50": _mean_defined(ap[n][0.50]["all"] for n in names),
            "ap_75": _mean_defined(ap[n][0.75]["all"] for n in names),
            "ap_small": _mean_defined(
                ap[n][t]["small"] for n in names for t in thresholds
            ),
            "ap_medium": _mean_defined(
                ap[n][t]["medium"] for n in names for t in thresholds
            ),
            "ap_large": _mean_defined(
                ap[n][t]["large"] for n in names for t in thresholds
            ),
        }

    per_class = {
        cat.name: EvalSummary(**slice_summary([cat.name])) for cat in cats
    }
    return EvalSummary(**slice_summary([c.name for c in cats]), per_class=per_class)


def pr_points(
    detections: Sequence[DetectionRecord],
    dataset: Dataset,
    thresholds: Iterable[float] = COCO_THRESHOLDS,
) -> list[dict]:
    """Raw precision/recall points per (class, IoU threshold), for CSV export."""
    thresholds = check_thresholds(thresholds)
    images = dataset.image_index()
    eval_ids = {im.id for im in dataset.images if im.split == "test"} or set(images)
    rows: list[dict] = []
    for cat in sorted(dataset.categories, key=lambda c: c.id):
        gts = [
            a for a in dataset.annotations
            if a.category_id == cat.id and a.image_id in eval_ids
        ]
        dets = [
            d for d in detections
            if d.category_id == cat.id and d.image_id in eval_ids
        ]
        groups = _ClassGroups(dets, gts)
        ranked = [dets[i] for i in groups.det_order]
        for t in thresholds:
            status, n_pos = groups.statuses(t, "all")
            tp = 0
            for k, (det, flag) in enumerate(zip(ranked, status), start=1):
                tp += int(flag == 1)
                rows.append(
                    {
                        "class": cat.name,
                        "iou": t,
                        "score": det.score,
                        "recall": tp / n_pos if n_pos else 0.0,
                        "precision": tp / k,
                    }
                )
    return rows


def load_detections(text: str) -> list[DetectionRecord]:
    """Parse a detection prediction file (COCO results layout)."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed JSON at offset {exc.pos}: {exc.msg}") from exc
    if not isinstance(doc, list):
        raise SchemaError("prediction file must be a JSON array")
    out: list[DetectionRecord] = []
    for i, item in enumerate(doc):
        where = f"predictions[{i}]"
        if not isinstance(item, dict):
            raise SchemaError(f"{where}: expected an object")
        for key in ("image_id", "category_id", "bbox", "score"):
            if key not in item:
                raise SchemaError(f'{where}: missing field "{key}"')
        raw = item["bbox"]
        if not isinstance(raw, list) or len(raw) != 4:
            raise SchemaError(f"{where}: bbox must be [x, y, w, h]")
        try:
            record = DetectionRecord(
                image_id=int(item["image_id"]),
                category_id=int(item["category_id"]),
                bbox=BBox(*(float(v) for v in raw)),
                score=float(item["score"]),
                label=item.get("label"),
                class_score=item.get("class_score"),
            )
        except (TypeError, ValueError) as exc:
            raise SchemaError(f"{where}: {exc}") from exc
        out.append(record)
    return out


def dump_detections(records: Sequence[DetectionRecord]) -> str:
    """Serialize detections byte-stably; aux fields appear only when set."""
    items = []
    for det in records:
        item: dict = {
            "image_id": det.image_id,
            "category_id": det.category_id,
            "bbox": det.bbox.as_list(),
            "score": det.score,
        }
        if det.label is not None:
            item["label"] = det.label
        if det.class_score is not None:
            item["class_score"] = float(det.class_score)
        items.append(item)
    return json.dumps(items, ensure_ascii=False, sort_keys=True, separators=(",", ":"))


def summary_to_json_obj(summary: EvalSummary) -> dict:
    obj = {
        "map_50_95": summary.map_50_95,
        "ap_50": summary.ap_50,
        "ap_75": summary.ap_75,
        "ap_small": summary.ap_small,
        "ap_medium": summary.ap_medium,
        "ap_large": summary.ap_large,
    }
    if summary.per_class:
        obj["per_class"] = {
            name: summary_to_json_obj(sub) for name, sub in sorted(summary.per_class.items())
        }
    return obj


def render_summary(summary: EvalSummary) -> str:
    """Plain-text table with the standard headline metric columns."""
    headers = ("slice", "mAP@0.50:0.95", "mAP@0.50", "mAP@0.75", "AP_S", "AP_M", "AP_L")
    rows = [("all",) + _row(summary)]
    for name, sub in sorted(summary.per_class.items()):
        rows.append((name,) + _row(sub))
    widths = [max(len(h), *(len(r[i]) for r in rows)) for i, h in enumerate(headers)]
    lines = [
        "  ".join(h.ljust(widths[i]) for i, h in enumerate(headers)),
        "  ".join("-" * w for w in widths),
    ]
    for row in rows:
        lines.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)))
    return "\n".join(lines)


def _row(summary: EvalSummary) -> tuple[str, ...]:
    def fmt(v: float) -> str:
        return "-" if v == -1.0 else f"{v:.3f}"

    return (
        fmt(summary.map_50_95),
        fmt(summary.ap_50),
        fmt(summary.ap_75),
        fmt(summary.ap_small),
        fmt(summary.ap_medium),
        fmt(summary.ap_large),
    )
