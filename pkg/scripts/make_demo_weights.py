#!/usr/bin/env python3
"""Create a ready-to-run demo config directory.

Writes seeded (untrained) reference weights for the canonical detector,
the bundled 100-food label set, a five-anchor prior file, and a pipeline
config.json pointing at all of them. After this you can run:

    foodspot detect --config <dir>/config.json --image <photo>
    foodspot serve  --config <dir>/config.json
"""

import argparse
import json
import os
import shutil
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from foodspot.model import build_mobilenet_yolo, count_parameters
from foodspot.nutrition import DEFAULT_DB_PATH, DEFAULT_LABELS_PATH
from foodspot.weights import generate_weights, save_weights_files

DEFAULT_ANCHORS = [(0.55, 0.62), (1.60, 1.35), (3.10, 0.90), (1.10, 3.20), (4.40, 4.10)]


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="demo", help="output directory")
    parser.add_argument("--seed", type=int, default=1234)
    args = parser.parse_args()

    os.makedirs(args.out, exist_ok=True)
    shutil.copy(DEFAULT_LABELS_PATH, os.path.join(args.out, "labels.txt"))
    with open(os.path.join(args.out, "anchors.txt"), "w", encoding="utf-8") as fh:
        for w, h in DEFAULT_ANCHORS:
            fh.write(f"{w} {h}\n")

    spec = build_mobilenet_yolo(num_classes=100, num_anchors=len(DEFAULT_ANCHORS))
    store = generate_weights(spec, seed=args.seed)
    manifest = os.path.join(args.out, "demo.weights.json")
    blob = save_weights_files(store, spec, manifest)

    config = {
        "weights": "demo.weights.json",
        "anchors": "anchors.txt",
        "labels": "labels.txt",
        "nutrition_db": DEFAULT_DB_PATH,
        "conf_threshold": 0.4,
        "nms_threshold": 0.3,
    }
    with open(os.path.join(args.out, "config.json"), "w", encoding="utf-8") as fh:
        json.dump(config, fh, indent=2)

    print(f"model: 30 layers, {count_parameters(spec):,} parameters")
    print(f"weights: {manifest} + {blob} ({os.path.getsize(blob) / 1e6:.1f} MB)")
    print(f"config: {os.path.join(args.out, 'config.json')}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
