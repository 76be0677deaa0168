#!/usr/bin/env python3
"""Regenerate the committed test fixtures (deterministic).

tests/data/cluster_shapes_5.txt : five separated shape clusters, 36 boxes each
tests/data/meal.ppm             : synthetic plate photo used by pipeline tests
"""

import os
import sys

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from foodspot.images import save_ppm
from foodspot.rng import SplitMix64
from foodspot.tensor import Tensor

DATA = os.path.join(os.path.dirname(__file__), "..", "tests", "data")


def write_cluster_shapes():
    centers = [(0.55, 0.62), (1.6, 1.35), (3.1, 0.9), (1.1, 3.2), (4.4, 4.1)]
    stream = SplitMix64(20260809)
    lines = []
    for cw, ch in centers:
        for _ in range(36):
            w = cw * (1.0 + stream.uniform(-0.06, 0.06))
            h = ch * (1.0 + stream.uniform(-0.06, 0.06))
            lines.append(f"{w:.6f} {h:.6f}")
    path = os.path.join(DATA, "cluster_shapes_5.txt")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# synthetic box shapes: five separated clusters, 36 boxes each\n")
        fh.write("\n".join(lines) + "\n")
    print(f"wrote {path}")


def write_meal_image():
    h, w = 120, 160
    img = np.zeros((h, w, 3), dtype=np.float64)
    img[:, :] = (0.35, 0.25, 0.18)
    yy, xx = np.mgrid[0:h, 0:w]
    plate = ((yy - 60) ** 2 / 45**2 + (xx - 80) ** 2 / 65**2) <= 1.0
    img[plate] = (0.92, 0.92, 0.90)
    blobs = [
        ((58, 55), (16, 20), (0.85, 0.80, 0.55)),
        ((52, 100), (12, 14), (0.75, 0.35, 0.25)),
        ((75, 82), (9, 18), (0.30, 0.60, 0.30)),
    ]
    for (cy, cx), (ry, rx), color in blobs:
        mask = ((yy - cy) ** 2 / ry**2 + (xx - cx) ** 2 / rx**2) <= 1.0
        img[mask] = color
    stream = SplitMix64(7)
    noise = np.array([stream.next_float() for _ in range(h * w)]).reshape(h, w, 1)
    img = np.clip(img + (noise - 0.5) * 0.06, 0, 1)
    path = os.path.join(DATA, "meal.ppm")
    save_ppm(path, Tensor(img.astype(np.float32)))
    print(f"wrote {path}")


if __name__ == "__main__":
    os.makedirs(DATA, exist_ok=True)
    write_cluster_shapes()
    write_meal_image()
