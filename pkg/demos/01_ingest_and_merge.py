"""Ingesting three annotation-source families and merging them.

Sources arrive as COCO-style JSON, YOLO fraction labels, or plain
label-directory manifests. Everything lands in the same Dataset records,
so merging and bookkeeping work uniformly afterwards.

Run: python3 demos/01_ingest_and_merge.py
"""

import json

from litterkit import emit, ingest_coco, ingest_label_dirs, ingest_yolo, merge, validate

# --- 1. a COCO-style detection source ---------------------------------------

coco_doc = {
    "images": [
        {"id": 1, "file_name": "street_001.jpg", "width": 640, "height": 480},
        {"id": 2, "file_name": "street_002.jpg", "width": 640, "height": 480},
    ],
    "annotations": [
        {"id": 1, "image_id": 1, "category_id": 1, "bbox": [100, 120, 80, 60]},
        {"id": 2, "image_id": 1, "category_id": 2, "bbox": [300, 200, 40, 90]},
        {"id": 3, "image_id": 2, "category_id": 1, "bbox": [50, 50, 200, 150]},
    ],
    "categories": [{"id": 1, "name": "rubbish"}, {"id": 2, "name": "bottle"}],
}
street = ingest_coco(json.dumps(coco_doc), "street_survey")
print(f"COCO source: {len(street.images)} images, {len(street.annotations)} boxes")

# --- 2. a YOLO source: fraction lines plus externally known dimensions ------

yolo_labels = {
    "can_001.jpg": "0 0.5 0.5 0.2 0.3\n",
    "can_002.jpg": "1 0.25 0.25 0.1 0.1\n0 0.75 0.75 0.2 0.2\n",
}
dims = {"can_001.jpg": (512, 683), "can_002.jpg": (512, 683)}
drink = ingest_yolo(yolo_labels, dims, ["Aluminium Cans", "Glass bottles"], "drinking_waste")
print(f"YOLO source: boxes converted to absolute pixels, e.g. "
      f"{drink.annotations[0].bbox.as_list()}")

# --- 3. a label-directory source: one whole-image box per listing -----------

trashnet = ingest_label_dirs(
    {"glass": ["g1.jpg", "g2.jpg"], "paper": ["p1.jpg"]},
    {"g1.jpg": (512, 384), "g2.jpg": (512, 384), "p1.jpg": (512, 384)},
    "trashnet",
)
print(f"label-dir source: every annotation covers the full image, "
      f"area {trashnet.annotations[0].area:.0f}px^2")

# --- 4. merge: ids renumbered, counts conserved, provenance kept ------------

combined = merge([street, drink, trashnet])
print(f"\nmerged: {len(combined.images)} images "
      f"(= {len(street.images)}+{len(drink.images)}+{len(trashnet.images)}), "
      f"{len(combined.annotations)} annotations")
print(f"provenance: {', '.join(combined.provenance)}")
print(f"violations after merge: {len(validate(combined))}")

# The interchange emitter is byte-stable: same dataset, same bytes.
assert emit(combined) == emit(merge([street, drink, trashnet]))
print("emit() is byte-stable across identical runs")
