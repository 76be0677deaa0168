"""K-means clustering of box shapes under the 1 - IoU distance.

Produces the prior anchor shapes the decoder offsets against. The update
step uses the per-dimension median (robust under the IoU distance), empty
clusters are re-seeded from the worst-assigned box, and every run returns
the best assignment state it visited, so the best-of-restarts average IoU
never loses to its own initialization.
"""

from __future__ import annotations

from typing import Iterable, List, Sequence, Tuple

import numpy as np

from .boxes import Anchor
from .rng import SplitMix64

MAX_ITERATIONS = 300


class DegenerateClusterError(ValueError):
    """Fewer distinct shapes than requested clusters."""


def _as_shape_array(boxes: Iterable) -> np.ndarray:
    arr = np.asarray([(float(w), float(h)) for w, h in boxes], dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError("boxes must be (w, h) pairs")
    if arr.size == 0:
        raise ValueError("no boxes given")
    if np.any(arr <= 0) or not np.all(np.isfinite(arr)):
        raise ValueError("box dims must be positive and finite")
    return arr


def _iou_matrix(shapes: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """(n, k) matrix of shape IoU between boxes and cluster centers."""
    inter = np.minimum(shapes[:, None, 0], centers[None, :, 0]) * np.minimum(
        shapes[:, None, 1], centers[None, :, 1]
    )
    areas = shapes[:, 0] * shapes[:, 1]
    c_areas = centers[:, 0] * centers[:, 1]
    union = areas[:, None] + c_areas[None, :] - inter
    return inter / union


def _sample_distinct(unique: np.ndarray, k: int, stream: SplitMix64) -> np.ndarray:
    idx = list(range(len(unique)))
    stream.shuffle(idx)
    return unique[np.asarray(idx[:k])]


def _lloyd(shapes: np.ndarray, init: np.ndarray) -> Tuple[np.ndarray, float]:
    """One clustering run; returns the best (centers, avg_iou) state seen."""
    centers = init.copy()
    k = len(centers)
    prev_assign = None
    best_centers, best_avg = centers.copy(), -1.0
    for _ in range(MAX_ITERATIONS):
        ious = _iou_matrix(shapes, centers)
        assign = np.argmax(ious, axis=1)
        avg = float(np.mean(ious[np.arange(len(shapes)), assign]))
        if avg > best_avg:
            best_centers, best_avg = centers.copy(), avg
        if prev_assign is not None and np.array_equal(assign, prev_assign):
            break
        prev_assign = assign
        new_centers = centers.copy()
        empties = []
        for c in range(k):
            members = shapes[assign == c]
            if len(members):
                new_centers[c] = np.median(members, axis=0)
            else:
                empties.append(c)
        if empties:
            # hand each empty cluster one of the worst-assigned boxes
            worst = np.argsort(ious[np.arange(len(shapes)), assign])
            for c, b in zip(empties, worst):
                new_centers[c] = shapes[b]
        centers = new_centers
    return best_centers, best_avg


def kmeans_anchors(
    boxes: Iterable,
    k: int,
    seed: int = 0,
    restarts: int = 10,
    _extra_inits: Sequence[np.ndarray] = (),
) -> Tuple[List[Anchor], float]:
    """Cluster (w, h) shapes into k prior anchors.

    Returns anchors sorted by area ascending and the mean IoU between each
    box and its assigned anchor, best over `restarts` seeded runs.
    """
    shapes = _as_shape_array(boxes)
    if k < 1:
        raise ValueError("k must be at least 1")
    if len(shapes) < k:
        raise ValueError(f"need at least k={k} boxes, got {len(shapes)}")
    unique = np.unique(shapes, axis=0)
    if len(unique) < k:
        raise DegenerateClusterError(
            f"k={k} exceeds the {len(unique)} distinct box shapes"
        )
    master = SplitMix64(seed)
    best_centers, best_avg = None, -1.0
    inits = [_sample_distinct(unique, k, master.spawn()) for _ in range(max(restarts, 1))]
    inits.extend(np.asarray(e, dtype=np.float64) for e in _extra_inits)
    for init in inits:
        centers, avg = _lloyd(shapes, init)
        if avg > best_avg:
            best_centers, best_avg = centers, avg
    order = np.lexsort((best_centers[:, 1], best_centers[:, 0], best_centers.prod(axis=1)))
    anchors = [Anchor(float(w), float(h)) for w, h in best_centers[order]]
    return anchors, best_avg


def avg_iou_curve(
    boxes: Iterable,
    k_range: Iterable[int] = range(1, 11),
    seed: int = 0,
    restarts: int = 10,
) -> List[Tuple[int, float]]:
    """Average IoU for each cluster count, non-decreasing in k.

    Besides the random restarts, each k also tries the previous k's solution
    extended by the worst-assigned box, which guarantees monotonicity.
    """
    shapes = _as_shape_array(boxes)
    curve: List[Tuple[int, float]] = []
    prev_centers: np.ndarray | None = None
    for k in k_range:
        extra = []
        if prev_centers is not None and len(prev_centers) == k - 1:
            ious = _iou_matrix(shapes, prev_centers)
            ranked = np.argsort(ious.max(axis=1))  # worst-covered first
            for b in ranked:
                candidate = shapes[b]
                if not any(np.array_equal(candidate, c) for c in prev_centers):
                    extra.append(np.vstack([prev_centers, candidate]))
                    break
        anchors, avg = kmeans_anchors(
            shapes, k, seed=seed + k, restarts=restarts, _extra_inits=extra
        )
        curve.append((k, avg))
        prev_centers = np.asarray([(a.w, a.h) for a in anchors])
    return curve
