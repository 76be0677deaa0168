"""Grid codec between box lists and the raw network output vector.

The output vector covers an S x S grid with A anchors per cell and 5 + C
values per anchor slot: [t_x, t_y, t_w, t_h, objectness, class scores].
Decoding applies sigmoid to the center offsets and objectness, exp to the
size offsets (relative to the anchor), and softmax over class scores:

    b_x = (col + sigmoid(t_x)) / S        w = anchor_w * exp(t_w) / S
    b_y = (row + sigmoid(t_y)) / S        h = anchor_h * exp(t_h) / S

confidence = sigmoid(objectness) * max class probability, and only
detections strictly above the confidence threshold are returned.
Encoding writes ground truth through the inverse transform, objectness 1
and a one-hot class at the box's (cell, anchor) slot.
"""

from __future__ import annotations

import math
from typing import List, Sequence

import numpy as np

from .boxes import Anchor, BBox, Detection, GroundTruth, pairwise_max_shape_iou

_LOGIT_EPS = 1e-9


class SlotCollisionError(ValueError):
    """Two ground-truth boxes landed on the same (cell, anchor) slot."""


def target_length(S: int, num_anchors: int, num_classes: int) -> int:
    return S * S * num_anchors * (5 + num_classes)


def _logit(p: float) -> float:
    p = min(max(p, _LOGIT_EPS), 1.0 - _LOGIT_EPS)
    return math.log(p / (1.0 - p))


def encode(gt: GroundTruth, anchors: Sequence[Anchor], S: int, C: int) -> np.ndarray:
    """Ground truth -> training-target vector (inverse of decode at the box slots)."""
    A = len(anchors)
    if A == 0:
        raise ValueError("anchors must be nonempty")
    width = 5 + C
    target = np.zeros(S * S * A * width, dtype=np.float32)
    occupied = {}
    for box, class_id in gt.items:
        if class_id >= C:
            raise ValueError(f"class id {class_id} out of range for C={C}")
        col = min(int(box.cx * S), S - 1)
        row = min(int(box.cy * S), S - 1)
        a_idx, _ = pairwise_max_shape_iou(Anchor(box.w * S, box.h * S), anchors)
        slot = (row * S + col) * A + a_idx
        if slot in occupied:
            raise SlotCollisionError(
                f"cell ({row},{col}) anchor {a_idx} claimed by both "
                f"{occupied[slot]} and {(box, class_id)}"
            )
        occupied[slot] = (box, class_id)
        base = slot * width
        target[base + 0] = _logit(box.cx * S - col)
        target[base + 1] = _logit(box.cy * S - row)
        target[base + 2] = math.log(box.w * S / anchors[a_idx].w)
        target[base + 3] = math.log(box.h * S / anchors[a_idx].h)
        target[base + 4] = 1.0
        target[base + 5 + class_id] = 1.0
    return target


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    e = np.exp(x[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def decode(
    raw: Sequence[float],
    anchors: Sequence[Anchor],
    S: int,
    C: int,
    conf_threshold: float = 0.4,
) -> List[Detection]:
    """Raw output vector -> thresholded detections, confidence-descending.

    Ties in confidence are broken by slot index so the ordering is total
    and reproducible.
    """
    A = len(anchors)
    raw = np.asarray(raw, dtype=np.float64)
    expected = target_length(S, A, C)
    if raw.shape != (expected,):
        raise ValueError(f"raw output must have length {expected}, got {raw.shape}")
    grid = raw.reshape(S, S, A, 5 + C)

    sx = _sigmoid(grid[..., 0])
    sy = _sigmoid(grid[..., 1])
    cols = np.arange(S, dtype=np.float64)[None, :, None]
    rows = np.arange(S, dtype=np.float64)[:, None, None]
    bx = (cols + sx) / S
    by = (rows + sy) / S
    aw = np.array([a.w for a in anchors])[None, None, :]
    ah = np.array([a.h for a in anchors])[None, None, :]
    with np.errstate(over="ignore"):
        bw = aw * np.exp(grid[..., 2]) / S
        bh = ah * np.exp(grid[..., 3]) / S

    scores = grid[..., 5:]
    scores = scores - scores.max(axis=-1, keepdims=True)
    with np.errstate(under="ignore"):
        e = np.exp(scores)
    probs = e / e.sum(axis=-1, keepdims=True)
    class_ids = probs.argmax(axis=-1)
    best_prob = np.take_along_axis(probs, class_ids[..., None], axis=-1)[..., 0]
    conf = _sigmoid(grid[..., 4]) * best_prob

    keep = np.flatnonzero(conf.ravel() > conf_threshold)
    flat = (bx.ravel(), by.ravel(), bw.ravel(), bh.ravel(), conf.ravel(), class_ids.ravel())
    order = keep[np.lexsort((keep, -flat[4][keep]))]
    return [
        Detection(
            box=BBox.clamped(flat[0][i], flat[1][i], flat[2][i], flat[3][i]),
            class_id=int(flat[5][i]),
            confidence=min(float(flat[4][i]), 1.0),
        )
        for i in order
    ]
