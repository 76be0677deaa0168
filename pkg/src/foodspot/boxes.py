"""Box geometry: IoU, shape IoU for anchor clustering, and greedy NMS.

Boxes are center-parameterized and normalized to the image ([0,1] fractions);
anchors are width/height pairs in grid-cell units.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, List, Sequence, Tuple


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box: center (cx, cy), size (w, h), all image fractions."""

    cx: float
    cy: float
    w: float
    h: float

    def __post_init__(self):
        if not (0.0 <= self.cx <= 1.0 and 0.0 <= self.cy <= 1.0):
            raise ValueError(f"box center out of [0,1]: ({self.cx}, {self.cy})")
        if not (0.0 < self.w <= 1.0 and 0.0 < self.h <= 1.0):
            raise ValueError(f"box size out of (0,1]: ({self.w}, {self.h})")

    @classmethod
    def clamped(cls, cx: float, cy: float, w: float, h: float) -> "BBox":
        """Clamp raw decode output into the valid range."""
        tiny = 1e-9
        return cls(
            min(max(cx, 0.0), 1.0),
            min(max(cy, 0.0), 1.0),
            min(max(w, tiny), 1.0),
            min(max(h, tiny), 1.0),
        )

    def corners(self) -> Tuple[float, float, float, float]:
        return (
            self.cx - self.w / 2.0,
            self.cy - self.h / 2.0,
            self.cx + self.w / 2.0,
            self.cy + self.h / 2.0,
        )

    @property
    def area(self) -> float:
        return self.w * self.h


@dataclass(frozen=True)
class Anchor:
    """Prior box shape in grid-cell units."""

    w: float
    h: float

    def __post_init__(self):
        if self.w <= 0 or self.h <= 0:
            raise ValueError(f"anchor dims must be positive: ({self.w}, {self.h})")

    @property
    def area(self) -> float:
        return self.w * self.h


@dataclass(frozen=True)
class Detection:
    box: BBox
    class_id: int
    confidence: float

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence out of [0,1]: {self.confidence}")
        if self.class_id < 0:
            raise ValueError(f"negative class id: {self.class_id}")


@dataclass(frozen=True)
class GroundTruth:
    image_id: str
    items: Tuple[Tuple[BBox, int], ...]

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))
        for _, class_id in self.items:
            if class_id < 0:
                raise ValueError(f"negative class id in {self.image_id}")


def iou(a: BBox, b: BBox) -> float:
    """Overlap area over union area. Degenerate zero-area operands give 0."""
    ax0, ay0, ax1, ay1 = a.corners()
    bx0, by0, bx1, by1 = b.corners()
    iw = min(ax1, bx1) - max(ax0, bx0)
    ih = min(ay1, by1) - max(ay0, by0)
    if iw <= 0.0 or ih <= 0.0:
        return 0.0
    inter = iw * ih
    # areas from the same corner values so iou(a, a) is exactly 1.0
    union = (ax1 - ax0) * (ay1 - ay0) + (bx1 - bx0) * (by1 - by0) - inter
    if union <= 0.0:
        return 0.0
    return min(inter / union, 1.0)


def shape_iou(a: Anchor, b: Anchor) -> float:
    """IoU of two box shapes laid over a common corner (clustering metric)."""
    inter = min(a.w, b.w) * min(a.h, b.h)
    union = a.area + b.area - inter
    if union <= 0.0:
        return 0.0
    return inter / union


def nms(dets: Sequence[Detection], overlap_threshold: float = 0.3) -> List[Detection]:
    """Greedy per-class suppression.

    Keeps the highest-confidence box, drops any same-class box whose IoU
    with a kept box exceeds the threshold. Output is confidence-descending,
    ties broken by original index.
    """
    order = sorted(range(len(dets)), key=lambda i: (-dets[i].confidence, i))
    kept: List[Detection] = []
    kept_by_class: dict = {}
    for i in order:
        d = dets[i]
        suppressed = any(
            iou(d.box, k.box) > overlap_threshold for k in kept_by_class.get(d.class_id, ())
        )
        if not suppressed:
            kept.append(d)
            kept_by_class.setdefault(d.class_id, []).append(d)
    return kept


def pairwise_max_shape_iou(box: Anchor, anchors: Iterable[Anchor]) -> Tuple[int, float]:
    """(index, value) of the best-matching anchor; ties go to the lowest index."""
    best_i, best_v = 0, -1.0
    for i, a in enumerate(anchors):
        v = shape_iou(box, a)
        if v > best_v:
            best_i, best_v = i, v
    return best_i, best_v
