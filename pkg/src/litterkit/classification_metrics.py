"""Accuracy, confusion matrix, and per-class precision/recall/F1 reporting."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

from .model import ClassPrediction, ParseError, SchemaError, TARGET_CLASSES


@dataclass(frozen=True)
class ConfusionMatrix:
    """counts[i][j] = items of true class classes[i] predicted as classes[j]."""

    classes: tuple[str, ...]
    counts: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "classes", tuple(self.classes))
        object.__setattr__(self, "counts", tuple(tuple(row) for row in self.counts))
        k = len(self.classes)
        if len(self.counts) != k or any(len(row) != k for row in self.counts):
            raise ValueError("counts must be a KxK grid matching classes")
        if any(v < 0 for row in self.counts for v in row):
            raise ValueError("counts must be non-negative")

    def total(self) -> int:
        return sum(sum(row) for row in self.counts)

    def support(self, index: int) -> int:
        return sum(self.counts[index])


def confusion(
    truth: Sequence[str],
    predicted: Sequence[str],
    classes: Optional[Sequence[str]] = None,
) -> ConfusionMatrix:
    """Build a confusion matrix from parallel truth/prediction label lists.

    When `classes` is omitted the labels must come from the closed
    sorting-category set and the axes follow its canonical order.
    """
    if len(truth) != len(predicted):
        raise ValueError(
            f"length mismatch: {len(truth)} truth vs {len(predicted)} predictions"
        )
    if classes is None:
        observed = set(truth) | set(predicted)
        stray = observed - set(TARGET_CLASSES)
        if stray:
            raise ValueError(f"unknown class labels {sorted(stray)}; pass classes=")
        classes = [c for c in TARGET_CLASSES if c in observed]
    classes = tuple(classes)
    index = {c: i for i, c in enumerate(classes)}
    if len(index) != len(classes):
        raise ValueError("classes must be unique")
    grid = [[0] * len(classes) for _ in classes]
    for t, p in zip(truth, predicted):
        if t not in index:
            raise ValueError(f"truth label {t!r} not in classes")
        if p not in index:
            raise ValueError(f"predicted label {p!r} not in classes")
        grid[index[t]][index[p]] += 1
    return ConfusionMatrix(classes, tuple(tuple(row) for row in grid))


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int
    zero_support: bool = False


@dataclass(frozen=True)
class ClassReport:
    """Per-class precision/recall/F1 plus overall accuracy and macro means."""

    per_class: Mapping[str, ClassMetrics]
    accuracy: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    total: int


def report(matrix: ConfusionMatrix) -> ClassReport:
    """Metric report for a confusion matrix.

    precision_c = counts[c][c] / column_sum(c), recall_c = counts[c][c] /
    row_sum(c), f1 = 2pr/(p+r); empty denominators give 0 and zero-support
    classes are kept (flagged) rather than dropped.
    """
    k = len(matrix.classes)
    total = matrix.total()
    per_class: dict[str, ClassMetrics] = {}
    for i, name in enumerate(matrix.classes):
        tp = matrix.counts[i][i]
        col = sum(matrix.counts[r][i] for r in range(k))
        row = matrix.support(i)
        precision = tp / col if col else 0.0
        recall = tp / row if row else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        per_class[name] = ClassMetrics(
            precision=precision,
            recall=recall,
            f1=f1,
            support=row,
            zero_support=row == 0,
        )
    trace = sum(matrix.counts[i][i] for i in range(k))
    accuracy = trace / total if total else 0.0
    values = list(per_class.values())
    macro = lambda attr: (
        sum(getattr(v, attr) for v in values) / len(values) if values else 0.0
    )
    return ClassReport(
        per_class=per_class,
        accuracy=accuracy,
        macro_precision=macro("precision"),
        macro_recall=macro("recall"),
        macro_f1=macro("f1"),
        total=total,
    )


def load_class_predictions(text: str) -> list[ClassPrediction]:
    """Parse a classification prediction file: [{crop_id, label, score}]."""
    doc = _load_array(text)
    out: list[ClassPrediction] = []
    for i, item in enumerate(doc):
        where = f"predictions[{i}]"
        if not isinstance(item, dict):
            raise SchemaError(f"{where}: expected an object")
        for key in ("crop_id", "label", "score"):
            if key not in item:
                raise SchemaError(f'{where}: missing field "{key}"')
        try:
            out.append(
                ClassPrediction(
                    crop_id=int(item["crop_id"]),
                    label=str(item["label"]),
                    score=float(item["score"]),
                )
            )
        except (TypeError, ValueError) as exc:
            raise SchemaError(f"{where}: {exc}") from exc
    return out


def load_class_truth(text: str) -> list[tuple[int, str]]:
    """Parse a classification ground-truth file: [{crop_id, label}]."""
    doc = _load_array(text)
    out: list[tuple[int, str]] = []
    for i, item in enumerate(doc):
        where = f"truth[{i}]"
        if not isinstance(item, dict):
            raise SchemaError(f"{where}: expected an object")
        for key in ("crop_id", "label"):
            if key not in item:
                raise SchemaError(f'{where}: missing field "{key}"')
        label = str(item["label"])
        if label not in TARGET_CLASSES:
            raise SchemaError(f"{where}: unknown class label {label!r}")
        out.append((int(item["crop_id"]), label))
    return out


def _load_array(text: str) -> list:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed JSON at offset {exc.pos}: {exc.msg}") from exc
    if not isinstance(doc, list):
        raise SchemaError("file must be a JSON array")
    return doc


def report_to_json_obj(rep: ClassReport, matrix: Optional[ConfusionMatrix] = None) -> dict:
    obj: dict = {
        "accuracy": rep.accuracy,
        "macro_precision": rep.macro_precision,
        "macro_recall": rep.macro_recall,
        "macro_f1": rep.macro_f1,
        "total": rep.total,
        "per_class": {
            name: {
                "precision": m.precision,
                "recall": m.recall,
                "f1": m.f1,
                "support": m.support,
                "zero_support": m.zero_support,
            }
            for name, m in rep.per_class.items()
        },
    }
    if matrix is not None:
        obj["confusion"] = {
            "classes": list(matrix.classes),
            "counts": [list(row) for row in matrix.counts],
        }
    return obj


def render_report(rep: ClassReport) -> str:
    """Plain-text classification report, 2-decimal display rounding."""
    headers = ("class", "precision", "recall", "f1", "support")
    rows = []
    for name, m in rep.per_class.items():
        rows.append(
            (name, f"{m.precision:.2f}", f"{m.recall:.2f}", f"{m.f1:.2f}", str(m.support))
        )
    rows.append(("", "", "", "", ""))
    rows.append(("accuracy", "", "", f"{rep.accuracy:.2f}", str(rep.total)))
    rows.append(
        (
            "macro avg",
            f"{rep.macro_precision:.2f}",
            f"{rep.macro_recall:.2f}",
            f"{rep.macro_f1:.2f}",
            str(rep.total),
        )
    )
    widths = [max(len(h), *(len(r[i]) for r in rows)) for i, h in enumerate(headers)]
    lines = [
        "  ".join(h.ljust(widths[i]) for i, h in enumerate(headers)),
        "  ".join("-" * w for w in widths),
    ]
    for row in rows:
        lines.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip())
    return "\n".join(lines)
