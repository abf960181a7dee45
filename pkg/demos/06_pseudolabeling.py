"""Pseudo-label bookkeeping: rounds, replay, and sampler weights.

An unlabeled pool receives model predictions in rounds (per batch or per
epoch). Qualifying predictions become assignments; later rounds replace
them; human labels are untouchable. The weighted sampler then evens out
class frequencies for training.

Run: python3 demos/06_pseudolabeling.py
"""

from collections import Counter

import numpy as np

from litterkit import PseudoLabelState, Round, replay, sampler_weights, training_view
from litterkit.model import ClassPrediction


def preds(*triples):
    return tuple(ClassPrediction(crop_id=c, label=l, score=s) for c, l, s in triples)


state = PseudoLabelState(
    labeled={1: "glass", 2: "paper"},          # human labels, immutable
    pool=frozenset(range(10, 16)),             # unlabeled crops
    threshold=0.5,
    mode="per_epoch",
)

rounds = [
    Round(round_index=1, epoch=1, predictions=preds(
        (10, "metals_and_plastic", 0.91),
        (11, "bio", 0.35),                     # below threshold: ignored
        (12, "unknown", 0.66),
    )),
    Round(round_index=2, epoch=2, predictions=preds(
        (10, "glass", 0.58),                   # later round replaces, even if weaker
        (11, "bio", 0.81),                     # now qualifies
    )),
]

for step, snapshot in enumerate(replay(state, rounds), start=1):
    assigned = {c: (a.label, a.score, a.round_index) for c, a in snapshot.assigned.items()}
    print(f"after round {step}: {assigned}")

final = replay(state, rounds)[-1]
view = training_view(final)
print(f"\ntraining view: {len(view)} items "
      f"(= {len(final.labeled)} human + {len(final.assigned)} assigned)")
print("class histogram:", dict(Counter(view.values())))

# Weighted sampling: a 90/10 imbalance becomes a 50/50 expectation.
labels = {i: ("metals_and_plastic" if i < 900 else "bio") for i in range(1000)}
weights = sampler_weights(labels)
print(f"\nper-item weights: majority {weights[0]:.3f}, minority {weights[999]:.3f}")
rng = np.random.default_rng(0)
items = np.arange(1000)
p = np.array([weights[i] for i in items])
draws = rng.choice(items, size=200_000, p=p / p.sum())
print(f"sampled majority frequency: {np.mean(draws < 900):.3f} (expected 0.50)")
