"""Command-line front end: one subcommand per pipeline stage.

Subcommands are thin adapters over the library and compose via files.
Machine outputs are byte-stable for identical inputs and flags; all
diagnostics (including the optional --meta provenance block) go to
standard error. Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import json
import sys
from pathlib import Path

from . import __version__
from .classification_metrics import (
    confusion,
    load_class_predictions,
    load_class_truth,
    render_report,
    report,
    report_to_json_obj,
)
from .curate import (
    SplitSpec,
    compose_two_stage,
    crop_manifest,
    manifest_from_json,
    manifest_to_json,
    merge,
    render_stats,
    split,
    stats,
    stats_to_json_obj,
)
from .detection_metrics import (
    PRESETS,
    dump_detections,
    evaluate,
    load_detections,
    pr_points,
    render_summary,
    summary_to_json_obj,
)
from .formats import emit, ingest_coco, ingest_label_dirs, ingest_yolo, load
from .model import ParseError, SchemaError, validate
from .pseudolabel import (
    PseudoLabelState,
    replay,
    round_from_json,
    sampler_weights,
    state_from_json,
    state_to_json,
    training_view,
)
from .taxonomy import TaxonomyMap, collapse_to_single_class, map_categories


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors must exit 1, not argparse's 2
        raise _UsageError(message)


def _read(path: str) -> str:
    return Path(path).read_text(encoding="utf-8")


def _write_output(text: str, output: str | None) -> None:
    if not text.endswith("\n"):
        text += "\n"
    if output:
        Path(output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _check_range(name: str, value: float, low: float, high: float, *, open_low=False, open_high=False):
    ok_low = value > low if open_low else value >= low
    ok_high = value < high if open_high else value <= high
    if not (ok_low and ok_high):
        raise _UsageError(f"--{name} out of range")


def _load_dims(path: str) -> dict[str, tuple[int, int]]:
    doc = json.loads(_read(path))
    if not isinstance(doc, dict):
        raise SchemaError("dims file must map file names to [width, height]")
    dims = {}
    for name, pair in doc.items():
        if not isinstance(pair, list) or len(pair) != 2:
            raise SchemaError(f"dims for {name!r} must be [width, height]")
        dims[str(name)] = (int(pair[0]), int(pair[1]))
    return dims


def _cmd_ingest(args) -> int:
    source = args.source or Path(args.input[0]).stem
    if args.format == "coco":
        dataset = ingest_coco(_read(args.input[0]), source)
    elif args.format == "interchange":
        dataset = load(_read(args.input[0]))
    elif args.format == "yolo":
        if not args.dims or not args.classes:
            raise _UsageError("--format yolo requires --dims and --classes")
        dims = _load_dims(args.dims)
        class_names = [
            line.strip() for line in _read(args.classes).splitlines() if line.strip()
        ]
        label_files: dict[str, str] = {}
        root = Path(args.input[0])
        paths = sorted(root.glob("*.txt")) if root.is_dir() else [root]
        by_stem = {Path(k).stem: k for k in dims}
        for path in paths:
            key = path.stem if path.stem in dims else by_stem.get(path.stem, path.stem)
            label_files[key] = path.read_text(encoding="utf-8")
        dataset = ingest_yolo(label_files, dims, class_names, source)
    else:  # labels
        if not args.dims:
            raise _UsageError("--format labels requires --dims")
        manifest = json.loads(_read(args.input[0]))
        if not isinstance(manifest, dict):
            raise SchemaError("label manifest must map class names to file lists")
        dataset = ingest_label_dirs(
            {str(k): [str(f) for f in v] for k, v in manifest.items()},
            _load_dims(args.dims),
            source,
        )
    _write_output(emit(dataset), args.output)
    return 0


def _cmd_map(args) -> int:
    dataset = load(_read(args.input[0]))
    taxonomy = TaxonomyMap.from_json(_read(args.taxonomy))
    _write_output(emit(map_categories(dataset, taxonomy)), args.output)
    return 0


def _cmd_collapse(args) -> int:
    dataset = load(_read(args.input[0]))
    _write_output(emit(collapse_to_single_class(dataset)), args.output)
    return 0


def _cmd_merge(args) -> int:
    datasets = [load(_read(path)) for path in args.input]
    _write_output(emit(merge(datasets)), args.output)
    return 0


def _cmd_split(args) -> int:
    _check_range("ratio", args.ratio, 0.0, 1.0, open_low=True, open_high=True)
    dataset = load(_read(args.input[0]))
    stratify = {"category": "category", "source": "source_dataset", "none": "none"}
    spec = SplitSpec(train_fraction=args.ratio, seed=args.seed, stratify_by=stratify[args.stratify])
    _write_output(emit(split(dataset, spec)), args.output)
    return 0


def _cmd_stats(args) -> int:
    s = stats(load(_read(args.input[0])))
    if args.text:
        _write_output(render_stats(s), args.output)
    else:
        _write_output(_dump(stats_to_json_obj(s)), args.output)
    return 0


def _cmd_validate(args) -> int:
    violations = validate(load(_read(args.input[0])))
    obj = [
        {
            "record_type": v.record_type,
            "record_id": v.record_id,
            "rule": v.rule,
            "detail": v.detail,
        }
        for v in violations
    ]
    _write_output(_dump(obj), args.output)
    if violations:
        print(f"{len(violations)} violation(s) found", file=sys.stderr)
    return 0


def _cmd_crops(args) -> int:
    if args.margin < 0:
        raise _UsageError("--margin out of range")
    dataset = load(_read(args.input[0]))
    detections = load_detections(_read(args.detections)) if args.detections else None
    crops = crop_manifest(dataset, args.margin, detections=detections)
    _write_output(manifest_to_json(crops), args.output)
    return 0


def _thresholds(args) -> tuple[float, ...]:
    if args.iou is not None:
        _check_range("iou", args.iou, 0.0, 1.0, open_low=True)
        return (args.iou,)
    return PRESETS[args.preset]


def _cmd_eval_det(args) -> int:
    dataset = load(_read(args.input[0]))
    detections = load_detections(_read(args.detections))
    thresholds = _thresholds(args)
    interpolation = "11pt" if args.interpolation == "11" else "101pt"
    summary = evaluate(detections, dataset, thresholds, interpolation=interpolation)
    if args.pr_csv:
        rows = pr_points(detections, dataset, thresholds)
        with open(args.pr_csv, "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(
                fh, fieldnames=["class", "iou", "score", "recall", "precision"]
            )
            writer.writeheader()
            writer.writerows(rows)
    if args.text:
        _write_output(render_summary(summary), args.output)
    else:
        _write_output(_dump(summary_to_json_obj(summary)), args.output)
    return 0


def _cmd_eval_cls(args) -> int:
    truth = load_class_truth(_read(args.truth))
    predictions = load_class_predictions(_read(args.predictions))
    by_crop = {}
    for pred in predictions:
        if pred.crop_id in by_crop:
            raise SchemaError(f"multiple predictions for crop {pred.crop_id}")
        by_crop[pred.crop_id] = pred
    missing = [crop_id for crop_id, _ in truth if crop_id not in by_crop]
    if missing:
        raise SchemaError(f"no prediction for crops: {missing}")
    extras = len(by_crop) - len(truth)
    if extras > 0:
        print(f"ignoring {extras} prediction(s) without ground truth", file=sys.stderr)
    truth_labels = [label for _, label in truth]
    predicted = [by_crop[crop_id].label for crop_id, _ in truth]
    matrix = confusion(truth_labels, predicted)
    rep = report(matrix)
    if args.text:
        _write_output(render_report(rep), args.output)
    else:
        _write_output(_dump(report_to_json_obj(rep, matrix)), args.output)
    return 0


def _cmd_pseudo_label(args) -> int:
    if args.init:
        _check_range("threshold", args.threshold, 0.0, 1.0)
        labeled = {}
        if args.labeled:
            labeled = {crop_id: label for crop_id, label in load_class_truth(_read(args.labeled))}
        pool = []
        if args.pool:
            pool = [int(v) for v in json.loads(_read(args.pool))]
        state = PseudoLabelState(
            labeled=labeled,
            pool=frozenset(pool),
            threshold=args.threshold,
            mode=args.mode.replace("-", "_"),
        )
    elif args.state:
        state = state_from_json(_read(args.state))
    else:
        raise _UsageError("pseudo-label requires --state or --init")
    rounds = [round_from_json(_read(path)) for path in args.round or []]
    rounds.sort(key=lambda r: r.round_index)
    states = replay(state, rounds)
    final = states[-1] if states else state
    _write_output(state_to_json(final), args.output)
    if args.view:
        view = training_view(final)
        _write_output(
            _dump({str(k): v for k, v in sorted(view.items())}), args.view
        )
    if args.weights:
        weights = sampler_weights(training_view(final))
        _write_output(
            _dump({str(k): v for k, v in sorted(weights.items())}), args.weights
        )
    return 0


def _cmd_compose(args) -> int:
    detections = load_detections(_read(args.detections))
    crops = manifest_from_json(_read(args.crops))
    predictions = load_class_predictions(_read(args.predictions))
    composed = compose_two_stage(detections, crops, predictions)
    _write_output(dump_detections(composed), args.output)
    return 0


def _dump(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, sort_keys=True, separators=(",", ":"))


def build_parser() -> _Parser:
    parser = _Parser(prog="litterkit", description=__doc__)
    parser.add_argument("--version", action="version", version=f"litterkit {__version__}")
    sub = parser.add_subparsers(dest="command")

    def add(name, func, **kwargs):
        p = sub.add_parser(name, **kwargs)
        p.set_defaults(func=func)
        p.add_argument("--meta", action="store_true", help="print a provenance block to stderr")
        return p

    p = add("ingest", _cmd_ingest, help="parse an annotation source into interchange JSON")
    p.add_argument("--input", "-i", action="append", required=True)
    p.add_argument("--output", "-o")
    p.add_argument("--format", choices=("coco", "yolo", "labels", "interchange"), default="coco")
    p.add_argument("--source", help="source dataset name (default: input file stem)")
    p.add_argument("--dims", help="JSON map of file name to [width, height]")
    p.add_argument("--classes", help="text file with one class name per line (YOLO)")

    p = add("map", _cmd_map, help="map source categories onto the sorting classes")
    p.add_argument("--input", "-i", action="append", required=True)
    p.add_argument("--output", "-o")
    p.add_argument("--taxonomy", required=True)

    p = add("collapse", _cmd_collapse, help="collapse every class into single-class litter")
    p.add_argument("--input", "-i", action="append", required=True)
    p.add_argument("--output", "-o")

    p = add("merge", _cmd_merge, help="merge datasets, renumbering ids")
    p.add_argument("--input", "-i", action="append", required=True)
    p.add_argument("--output", "-o")

    p = add("split", _cmd_split, help="assign train/test splits, stratified")
    p.add_argument("--input", "-i", action="append", required=True)
    p.add_argument("--output", "-o")
    p.add_argument("--ratio", type=float, default=0.8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--stratify", choices=("category", "source", "none"), default="category")

    p = add("stats", _cmd_stats, help="dataset statistics")
    p.add_argument("--input", "-i", action="append", required=True)
    p.add_argument("--output", "-o")
    p.add_argument("--text", action="store_true", help="render a plain-text table")

    p = add("validate", _cmd_validate, help="report integrity violations")
    p.add_argument("--input", "-i", action="append", required=True)
    p.add_argument("--output", "-o")

    p = add("crops", _cmd_crops, help="generate a crop manifest from boxes")
    p.add_argument("--input", "-i", action="append", required=True)
    p.add_argument("--output", "-o")
    p.add_argument("--margin", type=float, default=0.0)
    p.add_argument("--detections", help="crop detections instead of ground truth")

    p = add("eval-det", _cmd_eval_det, help="detection metric summary")
    p.add_argument("--input", "-i", action="append", required=True)
    p.add_argument("--output", "-o")
    p.add_argument("--detections", required=True)
    p.add_argument("--iou", type=float, help="single IoU threshold")
    p.add_argument("--preset", choices=tuple(PRESETS), default="coco")
    p.add_argument("--interpolation", choices=("101", "11"), default="101")
    p.add_argument("--text", action="store_true")
    p.add_argument("--pr-csv", dest="pr_csv", help="write precision/recall points as CSV")

    p = add("eval-cls", _cmd_eval_cls, help="classification metric report")
    p.add_argument("--output", "-o")
    p.add_argument("--truth", required=True)
    p.add_argument("--predictions", required=True)
    p.add_argument("--text", action="store_true")

    p = add("pseudo-label", _cmd_pseudo_label, help="fold prediction rounds into a label state")
    p.add_argument("--output", "-o")
    p.add_argument("--state", help="state snapshot to continue from")
    p.add_argument("--init", action="store_true", help="start a fresh state")
    p.add_argument("--labeled", help="human labels file (crop_id/label array)")
    p.add_argument("--pool", help="JSON array of unlabeled crop ids")
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--mode", choices=("per-batch", "per-epoch", "none"), default="per-batch")
    p.add_argument("--round", action="append", help="round file, repeatable")
    p.add_argument("--view", help="also write the combined training label map")
    p.add_argument("--weights", help="also write balanced sampler weights")

    p = add("compose", _cmd_compose, help="re-label detections with stage-2 classes")
    p.add_argument("--output", "-o")
    p.add_argument("--detections", required=True)
    p.add_argument("--crops", required=True)
    p.add_argument("--predictions", required=True)
    return parser


def run(argv: list[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    if not getattr(args, "command", None):
        print("usage error: a subcommand is required (see --help)", file=sys.stderr)
        return 1
    if args.meta:
        block = {
            "tool": f"litterkit {__version__}",
            "argv": list(argv),
            "generated": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        }
        print(json.dumps(block, sort_keys=True), file=sys.stderr)
    try:
        return args.func(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (ParseError, SchemaError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run(sys.argv[1:]))
