"""Walking through the detection metric suite on a tiny scene.

Shows greedy matching, the 101-point interpolated AP staircase, size
buckets, and the full summary table with per-class rows.

Run: python3 demos/04_detection_metrics.py
"""

from litterkit import average_precision, bucket, evaluate, iou, match
from litterkit.detection_metrics import render_summary
from litterkit.model import (
    AnnotationRecord,
    BBox,
    CategoryDef,
    Dataset,
    DetectionRecord,
    ImageRecord,
)

# IoU basics: boxes are (x, y, w, h) in absolute pixels.
a, b = BBox(0, 0, 2, 2), BBox(1, 1, 2, 2)
print(f"iou(2x2 boxes offset by 1px) = {iou(a, b):.7f}  (1 cell over 7)")

# Size buckets at the 32^2 / 96^2 boundaries.
for area in (900, 1024, 9216):
    print(f"area {area:>5} -> {bucket(area)}")

# The AP staircase: two ground truths, detections ranked TP, FP, TP.
gts = [
    AnnotationRecord(id=1, image_id=1, category_id=1, bbox=BBox(0, 0, 10, 10), area=100),
    AnnotationRecord(id=2, image_id=1, category_id=1, bbox=BBox(100, 100, 10, 10), area=100),
]
dets = [
    DetectionRecord(image_id=1, category_id=1, bbox=BBox(0, 0, 10, 10), score=0.9),
    DetectionRecord(image_id=1, category_id=1, bbox=BBox(50, 50, 10, 10), score=0.8),
    DetectionRecord(image_id=1, category_id=1, bbox=BBox(100, 100, 10, 10), score=0.7),
]
pairs = match(dets, gts, 0.5)
print("\nmatching by descending score:",
      [(p[0].score, "TP" if p[1] else "FP") for p in pairs])
ap = average_precision(dets, gts, 0.5)
print(f"101-point AP = {ap:.4f}  (51 grid points at p=1.0, 50 at p=2/3)")
print(f"11-point AP = {average_precision(dets, gts, 0.5, interpolation='11pt'):.4f} "
      "(older convention, for comparison)")

# Full summary over a dataset: restricted to split="test" images.
dataset = Dataset(
    images=[ImageRecord(id=1, file_name="a.jpg", width=500, height=500, split="test")],
    annotations=gts,
    categories=[CategoryDef(id=1, name="litter")],
)
summary = evaluate(dets, dataset)
print("\n" + render_summary(summary))
print("\n(-1 marks slices without ground truth, e.g. empty size buckets)")
