"""Adapter command line: crop extraction and model-output emission."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .crops import extract_crops
from .emit import emit_classifications, emit_detections, emit_round
from .models import (
    center_box_detections,
    majority_class_classifications,
    run_classifier_command,
    run_detector_command,
)


def _read_labels(path: str) -> dict[int, str]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    return {int(item["crop_id"]): str(item["label"]) for item in doc}


def _cmd_crops(args) -> int:
    count = extract_crops(
        args.manifest,
        args.images_root,
        args.out_dir,
        dataset_path=args.dataset,
        batch_size=args.batch_size,
    )
    print(f"wrote {count} crops to {args.out_dir}", file=sys.stderr)
    return 0


def _cmd_detect(args) -> int:
    if args.command:
        records = run_detector_command(args.command, args.dataset)
    else:
        records = center_box_detections(args.dataset, score=args.score)
    emit_detections(records, args.output)
    return 0


def _cmd_classify(args) -> int:
    if args.command:
        records = run_classifier_command(args.command, args.crops_dir or ".")
    else:
        labels = _read_labels(args.labels) if args.labels else None
        records = majority_class_classifications(args.manifest, labels)
    emit_classifications(records, args.output)
    if args.round_output is not None:
        emit_round(records, args.round_index, args.epoch, args.round_output)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="litterkit-adapter", description=__doc__)
    parser.add_argument(
        "--version", action="version", version=f"litterkit-adapter {__version__}"
    )
    sub = parser.add_subparsers(dest="command_name", required=True)

    p = sub.add_parser("crops", help="cut manifest regions out of image pixels")
    p.set_defaults(func=_cmd_crops)
    p.add_argument("--manifest", required=True)
    p.add_argument("--images-root", required=True)
    p.add_argument("--dataset", required=True, help="interchange file naming the images")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--batch-size", type=int, default=32)

    p = sub.add_parser("detect", help="emit a detection prediction file")
    p.set_defaults(func=_cmd_detect)
    p.add_argument("--dataset", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--command", help="external detector template, receives {dataset}")
    p.add_argument("--score", type=float, default=0.5, help="built-in detector score")

    p = sub.add_parser("classify", help="emit a classification prediction file")
    p.set_defaults(func=_cmd_classify)
    p.add_argument("--manifest", required=True)
    p.add_argument("--crops-dir", help="crop directory handed to external commands")
    p.add_argument("--output", required=True)
    p.add_argument("--command", help="external classifier template, receives {crops}")
    p.add_argument("--labels", help="crop_id/label JSON used by the built-in classifier")
    p.add_argument("--round-output", help="also emit a pseudo-label round file")
    p.add_argument("--round-index", type=int, default=0)
    p.add_argument("--epoch", type=int, default=0)
    return parser


def run(argv: list[str]) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run(sys.argv[1:]))
