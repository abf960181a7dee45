"""Confusion matrices and per-class precision/recall/F1 reporting.

Run: python3 demos/05_classification_metrics.py
"""

import random

from litterkit import confusion, report
from litterkit.classification_metrics import render_report
from litterkit.model import WASTE_CLASSES

rng = random.Random(3)

# A deliberately imbalanced stream: lots of metals_and_plastic, little bio.
truth, predicted = [], []
for _ in range(400):
    cls = rng.choices(
        WASTE_CLASSES, weights=(2, 40, 200, 40, 15, 40, 60), k=1
    )[0]
    truth.append(cls)
    if rng.random() < 0.72:
        predicted.append(cls)  # correct
    elif rng.random() < 0.5:
        predicted.append("metals_and_plastic")  # the dominant confusion
    else:
        predicted.append(rng.choice(WASTE_CLASSES))

matrix = confusion(truth, predicted)
rep = report(matrix)
print(render_report(rep))

print("\nrow sums are per-class support; accuracy = trace / total")
print(f"accuracy {rep.accuracy:.3f}, macro-F1 {rep.macro_f1:.3f}")

# Zero-support classes stay in the report, flagged instead of dropped.
tiny = report(confusion(["glass"], ["glass"], classes=("glass", "bio")))
print(f"\nzero-support example: bio flagged={tiny.per_class['bio'].zero_support}")
