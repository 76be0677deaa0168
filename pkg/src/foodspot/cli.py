"""Command-line interface: detect, serve, bench, anchors, eval, augment.

Every pipeline command takes --config (JSON file) plus per-flag overrides.
`detect` prints the canonical JSON body on stdout (identical bytes to the
HTTP service) and timing on stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import dataio
from .anchors import avg_iou_curve, kmeans_anchors
from .augment import Sample, augment_set
from .bench import format_report, run_bench
from .boxes import Anchor
from .evaluate import mean_average_precision
from .images import load_image, save_ppm, to_unit_tensor
from .pipeline import Pipeline, PipelineConfig


def _load_config(args) -> PipelineConfig:
    overrides = {
        key: getattr(args, key, None)
        for key in ("weights", "anchors", "labels", "nutrition_db",
                    "conf_threshold", "nms_threshold")
    }
    return PipelineConfig.from_file(args.config, **overrides)


def _add_config_flags(p: argparse.ArgumentParser, thresholds: bool = True):
    p.add_argument("--config", required=True, help="pipeline config JSON")
    p.add_argument("--weights", help="override weights manifest path")
    p.add_argument("--anchors", help="override anchors file path")
    p.add_argument("--labels", help="override labels file path")
    p.add_argument("--nutrition-db", dest="nutrition_db", help="override nutrition table path")
    if thresholds:
        p.add_argument("--conf-threshold", dest="conf_threshold", type=float)
        p.add_argument("--nms-threshold", dest="nms_threshold", type=float)


def cmd_detect(args) -> int:
    pipeline = Pipeline(_load_config(args))
    with open(args.image, "rb") as fh:
        data = fh.read()
    response = pipeline.detect_image(data)
    sys.stdout.buffer.write(response.canonical_json())
    sys.stdout.buffer.flush()
    if args.timing:
        print(
            f"timing: wall {response.timing.wall_ms:.2f} ms, "
            f"cpu {response.timing.cpu_ms:.2f} ms",
            file=sys.stderr,
        )
    return 0


def cmd_serve(args) -> int:
    from .service import serve

    serve(_load_config(args), host=args.host, port=args.port, max_body_bytes=args.max_body)
    return 0


def cmd_bench(args) -> int:
    pipeline = Pipeline(_load_config(args))
    with open(args.image, "rb") as fh:
        data = fh.read()
    report = run_bench(pipeline, data, iterations=args.iterations)
    print(format_report(report))
    return 0


def cmd_anchors(args) -> int:
    grid = args.grid
    if grid is None and args.config:
        with open(args.config, encoding="utf-8") as fh:
            grid = json.load(fh).get("grid_size", 7)
    if grid is None:
        grid = 7
    gts = dataio.read_ground_truth(args.annotations)
    shapes = [(box.w * grid, box.h * grid) for gt in gts for box, _ in gt.items]
    if args.curve:
        curve = avg_iou_curve(shapes, k_range=range(1, args.max_k + 1),
                              seed=args.seed, restarts=args.restarts)
        for k, avg in curve:
            print(f"k={k:2d}  avg_iou={avg:.4f}")
    anchors, avg = kmeans_anchors(shapes, k=args.k, seed=args.seed, restarts=args.restarts)
    if args.out:
        dataio.write_anchors(args.out, anchors)
    print(f"k={args.k}: avg_iou={avg:.4f}  anchors="
          + " ".join(f"({a.w:.3f},{a.h:.3f})" for a in anchors))
    return 0


def cmd_eval(args) -> int:
    dets = dataio.read_detections(args.dets)
    gts = dataio.read_ground_truth(args.gt)
    report = mean_average_precision(dets, gts, iou_threshold=args.iou)
    doc = {
        "iou_threshold": args.iou,
        "map": report.map_score,
        "per_class_ap": {str(k): v for k, v in report.per_class_ap.items()},
    }
    print(json.dumps(doc, indent=2, sort_keys=True))
    if args.pr_csv:
        os.makedirs(args.pr_csv, exist_ok=True)
        for class_id, points in report.pr_points.items():
            path = os.path.join(args.pr_csv, f"class_{class_id}.csv")
            with open(path, "w", encoding="utf-8") as fh:
                fh.write("recall,precision\n")
                for r, p in points:
                    fh.write(f"{r:.6f},{p:.6f}\n")
    return 0


_IMAGE_EXTENSIONS = (".ppm", ".png", ".jpg", ".jpeg")


def cmd_augment(args) -> int:
    ann_path = os.path.join(args.in_dir, "annotations.txt")
    gts = dataio.read_ground_truth(ann_path)
    samples, ids = [], []
    for gt in gts:
        path = next(
            (
                os.path.join(args.in_dir, gt.image_id + ext)
                for ext in _IMAGE_EXTENSIONS
                if os.path.isfile(os.path.join(args.in_dir, gt.image_id + ext))
            ),
            None,
        )
        if path is None:
            print(f"no image file for id {gt.image_id!r} in {args.in_dir}", file=sys.stderr)
            return 2
        samples.append(Sample(to_unit_tensor(load_image(path)), gt.items))
        ids.append(gt.image_id)

    out = augment_set(samples, fraction=args.fraction, seed=args.seed)
    os.makedirs(args.out_dir, exist_ok=True)
    new_gts = []
    for image_id, sample in zip(ids, out):
        save_ppm(os.path.join(args.out_dir, image_id + ".ppm"), sample.image)
        new_gts.append(dataio.GroundTruth(image_id, sample.annotations))
    dataio.write_ground_truth(os.path.join(args.out_dir, "annotations.txt"), new_gts)
    print(f"wrote {len(out)} samples to {args.out_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="foodspot", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("detect", help="detect food items in one image")
    _add_config_flags(p)
    p.add_argument("--image", required=True, help="image file (PPM/PNG/JPEG)")
    p.add_argument("--timing", action="store_true", help="print timing to stderr")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("serve", help="run the HTTP detection service")
    _add_config_flags(p)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8157)
    p.add_argument("--max-body", type=int, default=8 * 1024 * 1024)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("bench", help="profile per-frame inference cost")
    _add_config_flags(p)
    p.add_argument("--image", required=True)
    p.add_argument("--iterations", type=int, default=20)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("anchors", help="cluster box shapes into prior anchors")
    p.add_argument("--annotations", required=True, help="ground-truth annotation file")
    p.add_argument("--config", help="pipeline config JSON (supplies the grid default)")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--grid", type=int, help="grid size for anchor units (default 7)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--max-k", type=int, default=10, help="largest k for --curve")
    p.add_argument("--out", help="anchors file to write")
    p.add_argument("--curve", action="store_true", help="print avg IoU for k=1..max-k")
    p.set_defaults(func=cmd_anchors)

    p = sub.add_parser("eval", help="score detections against ground truth")
    p.add_argument("--dets", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--iou", type=float, default=0.5)
    p.add_argument("--pr-csv", help="directory for per-class PR curves")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("augment", help="expand a dataset with seeded transforms")
    p.add_argument("--in", dest="in_dir", required=True)
    p.add_argument("--out", dest="out_dir", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--fraction", type=float, default=0.5)
    p.set_defaults(func=cmd_augment)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, LookupError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
