"""Pseudo-label bookkeeping for semi-supervised training runs.

This module is a simulator and ledger, not a trainer: prediction rounds
arrive as data (normally files produced by an external model), are folded
into an immutable state, and every intermediate state can be replayed and
audited. Human labels are never overwritten; model assignments are
replaced by later qualifying predictions, never revoked by weak ones.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

from .model import ClassPrediction, ParseError, SchemaError, TARGET_CLASSES

MODES = ("per_batch", "per_epoch", "none")


@dataclass(frozen=True)
class Assignment:
    label: str
    score: float
    round_index: int


@dataclass(frozen=True)
class PseudoLabelState:
    """Labeled items, the unlabeled pool, and current model assignments."""

    labeled: Mapping[int, str] = field(default_factory=dict)
    pool: frozenset[int] = frozenset()
    assigned: Mapping[int, Assignment] = field(default_factory=dict)
    threshold: float = 0.5
    mode: str = "per_batch"

    def __post_init__(self) -> None:
        object.__setattr__(self, "labeled", dict(self.labeled))
        object.__setattr__(self, "pool", frozenset(self.pool))
        object.__setattr__(self, "assigned", dict(self.assigned))
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError("threshold must lie in [0, 1]")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        for crop_id, label in self.labeled.items():
            if label not in TARGET_CLASSES:
                raise ValueError(f"crop {crop_id}: unknown class label {label!r}")
        overlap = self.labeled.keys() & self.pool
        if overlap:
            raise ValueError(f"labeled items cannot sit in the pool: {sorted(overlap)}")
        stray = self.assigned.keys() - self.pool
        if stray:
            raise ValueError(f"assignments outside the pool: {sorted(stray)}")
        for crop_id, a in self.assigned.items():
            if a.score < self.threshold:
                raise ValueError(
                    f"crop {crop_id}: assignment score {a.score} below threshold"
                )


@dataclass(frozen=True)
class Round:
    """One batch/epoch of model predictions over (part of) the pool."""

    round_index: int
    epoch: int
    predictions: tuple[ClassPrediction, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "predictions", tuple(self.predictions))


def assign(
    state: PseudoLabelState,
    predictions: Sequence[ClassPrediction],
    round_index: int,
) -> PseudoLabelState:
    """Fold one round of predictions into the state.

    Per pool item, the highest-score prediction of the round wins (ties
    to the earliest in the list). Winners at or above the threshold
    replace any earlier assignment; weaker ones leave existing
    assignments untouched. Predictions for human-labeled items are
    rejected outright. In mode "none" only round 0 has any effect.
    """
    for pred in predictions:
        if pred.crop_id in state.labeled:
            raise SchemaError(
                f"prediction for human-labeled crop {pred.crop_id} is not allowed"
            )
        if pred.crop_id not in state.pool:
            raise SchemaError(f"prediction references unknown crop {pred.crop_id}")
    if state.mode == "none" and round_index != 0:
        return state

    winners: dict[int, ClassPrediction] = {}
    for pred in predictions:
        cur = winners.get(pred.crop_id)
        if cur is None or pred.score > cur.score:
            winners[pred.crop_id] = pred

    assigned = dict(state.assigned)
    for crop_id, pred in winners.items():
        if pred.score >= state.threshold:
            assigned[crop_id] = Assignment(pred.label, pred.score, round_index)
    return PseudoLabelState(
        labeled=state.labeled,
        pool=state.pool,
        assigned=assigned,
        threshold=state.threshold,
        mode=state.mode,
    )


def replay(
    initial_state: PseudoLabelState, prediction_rounds: Sequence[Round]
) -> list[PseudoLabelState]:
    """Fold every round in order, returning each intermediate state.

    Round indices must be strictly increasing; in per_epoch mode each
    epoch index may carry at most one round.
    """
    states: list[PseudoLabelState] = []
    state = initial_state
    last_index: Optional[int] = None
    seen_epochs: set[int] = set()
    for rnd in prediction_rounds:
        if last_index is not None and rnd.round_index <= last_index:
            raise SchemaError(
                f"rounds out of order: {rnd.round_index} after {last_index}"
            )
        last_index = rnd.round_index
        if state.mode == "per_epoch":
            if rnd.epoch in seen_epochs:
                raise SchemaError(f"per_epoch mode allows one round per epoch, "
                                  f"got a second round for epoch {rnd.epoch}")
            seen_epochs.add(rnd.epoch)
        state = assign(state, rnd.predictions, rnd.round_index)
        states.append(state)
    return states


def training_view(
    state: PseudoLabelState, extra_labeled: Optional[Mapping[int, str]] = None
) -> dict[int, str]:
    """Union of human labels and current assignments; human labels win."""
    view = {crop_id: a.label for crop_id, a in state.assigned.items()}
    view.update(state.labeled)
    if extra_labeled:
        for crop_id, label in extra_labeled.items():
            if label not in TARGET_CLASSES:
                raise ValueError(f"crop {crop_id}: unknown class label {label!r}")
            view[crop_id] = label
    return view


def sampler_weights(label_map: Mapping[int, str]) -> dict[int, float]:
    """Per-item weights that equalize expected class frequencies.

    weight(item of class c) = N / (K * n_c) with N items and K classes
    present, so each present class carries total weight N / K and the
    mean weight is 1.
    """
    if not label_map:
        raise ValueError("label map must not be empty")
    counts: dict[str, int] = {}
    for label in label_map.values():
        counts[label] = counts.get(label, 0) + 1
    n = len(label_map)
    k = len(counts)
    return {crop_id: n / (k * counts[label]) for crop_id, label in label_map.items()}


def state_to_json(state: PseudoLabelState) -> str:
    doc = {
        "labeled": {str(k): v for k, v in state.labeled.items()},
        "pool": sorted(state.pool),
        "assigned": {
            str(k): {"label": a.label, "score": a.score, "round_index": a.round_index}
            for k, a in state.assigned.items()
        },
        "threshold": state.threshold,
        "mode": state.mode,
    }
    return json.dumps(doc, ensure_ascii=False, sort_keys=True, separators=(",", ":"))


def state_from_json(text: str) -> PseudoLabelState:
    doc = _load_object(text)
    for key in ("labeled", "pool", "assigned", "threshold", "mode"):
        if key not in doc:
            raise SchemaError(f'state snapshot: missing field "{key}"')
    try:
        assigned = {
            int(k): Assignment(
                label=str(v["label"]),
                score=float(v["score"]),
                round_index=int(v["round_index"]),
            )
            for k, v in doc["assigned"].items()
        }
        return PseudoLabelState(
            labeled={int(k): str(v) for k, v in doc["labeled"].items()},
            pool=frozenset(int(v) for v in doc["pool"]),
            assigned=assigned,
            threshold=float(doc["threshold"]),
            mode=str(doc["mode"]),
        )
    except (TypeError, KeyError, ValueError) as exc:
        raise SchemaError(f"state snapshot: {exc}") from exc


def round_to_json(rnd: Round) -> str:
    doc = {
        "round_index": rnd.round_index,
        "epoch": rnd.epoch,
        "predictions": [
            {"crop_id": p.crop_id, "label": p.label, "score": p.score}
            for p in rnd.predictions
        ],
    }
    return json.dumps(doc, ensure_ascii=False, sort_keys=True, separators=(",", ":"))


def round_from_json(text: str) -> Round:
    doc = _load_object(text)
    for key in ("round_index", "epoch", "predictions"):
        if key not in doc:
            raise SchemaError(f'round file: missing field "{key}"')
    if not isinstance(doc["predictions"], list):
        raise SchemaError('round file: "predictions" must be an array')
    preds = []
    for i, item in enumerate(doc["predictions"]):
        where = f"predictions[{i}]"
        if not isinstance(item, dict):
            raise SchemaError(f"{where}: expected an object")
        for key in ("crop_id", "label", "score"):
            if key not in item:
                raise SchemaError(f'{where}: missing field "{key}"')
        try:
            preds.append(
                ClassPrediction(
                    crop_id=int(item["crop_id"]),
                    label=str(item["label"]),
                    score=float(item["score"]),
                )
            )
        except (TypeError, ValueError) as exc:
            raise SchemaError(f"{where}: {exc}") from exc
    return Round(
        round_index=int(doc["round_index"]),
        epoch=int(doc["epoch"]),
        predictions=tuple(preds),
    )


def _load_object(text: str) -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed JSON at offset {exc.pos}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise SchemaError("expected a JSON object")
    return doc
