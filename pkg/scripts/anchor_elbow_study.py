#!/usr/bin/env python3
"""Average-IoU-vs-k study for anchor clustering.

Clusters box shapes for k = 1..max_k and prints the average IoU curve with
its per-step gains so the elbow is visible; five well-separated shape
clusters make the gain collapse after k = 5. Reads either an annotation
file (boxes scaled into grid units) or the committed synthetic fixture.
"""

import argparse
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from foodspot.anchors import avg_iou_curve, kmeans_anchors
from foodspot.dataio import read_ground_truth

FIXTURE = os.path.join(os.path.dirname(__file__), "..", "tests", "data", "cluster_shapes_5.txt")


def load_shapes(args):
    if args.annotations:
        gts = read_ground_truth(args.annotations)
        return [(box.w * args.grid, box.h * args.grid) for gt in gts for box, _ in gt.items]
    shapes = []
    with open(FIXTURE, encoding="utf-8") as fh:
        for line in fh:
            if line.strip() and not line.startswith("#"):
                w, h = line.split()
                shapes.append((float(w), float(h)))
    return shapes


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--annotations", help="ground-truth file; default: synthetic fixture")
    parser.add_argument("--grid", type=int, default=7)
    parser.add_argument("--max-k", type=int, default=10)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--restarts", type=int, default=10)
    args = parser.parse_args()

    shapes = load_shapes(args)
    print(f"{len(shapes)} box shapes")
    curve = avg_iou_curve(shapes, k_range=range(1, args.max_k + 1),
                          seed=args.seed, restarts=args.restarts)
    prev = None
    for k, avg in curve:
        gain = "" if prev is None else f"  (+{avg - prev:.4f})"
        bar = "#" * int(avg * 50)
        print(f"k={k:2d}  avg_iou={avg:.4f}{gain:12s} {bar}")
        prev = avg

    anchors, avg = kmeans_anchors(shapes, k=5, seed=args.seed, restarts=args.restarts)
    print(f"\nk=5 anchors (grid units), avg_iou={avg:.4f}:")
    for a in anchors:
        print(f"  {a.w:.3f} x {a.h:.3f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
