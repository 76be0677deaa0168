"""Training-set augmentation: blur, horizontal flip, Gaussian noise, color shift.

Only the flip moves box coordinates; the other three leave annotations
untouched. augment_set applies exactly one transform, chosen uniformly, to
a seeded random half (by default) of the samples and passes the rest
through unchanged, preserving order. The whole schedule is derived from a
single splitmix64 stream, so a seed pins byte-identical selection and
parameter choices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from .boxes import BBox
from .rng import SplitMix64, normal_array
from .tensor import Tensor

BLUR_SIGMA_RANGE = (0.5, 2.0)
NOISE_STDDEV_RANGE = (0.01, 0.05)
SHIFT_LIMIT = 0.12

TRANSFORM_NAMES = ("blur", "flip", "noise", "shift")


@dataclass(frozen=True)
class Sample:
    image: Tensor
    annotations: Tuple[Tuple[BBox, int], ...]

    def __post_init__(self):
        object.__setattr__(self, "annotations", tuple(self.annotations))
        if self.image.channels != 3:
            raise ValueError(f"samples are RGB; got {self.image.channels} channels")
        if self.image.data.min() < 0.0 or self.image.data.max() > 1.0:
            raise ValueError("image values must lie in [0, 1]")


def horizontal_flip(s: Sample) -> Sample:
    """Mirror about the vertical axis; box centers map cx -> 1 - cx."""
    flipped = np.ascontiguousarray(s.image.data[:, ::-1, :])
    boxes = tuple(
        (BBox(1.0 - box.cx, box.cy, box.w, box.h), class_id)
        for box, class_id in s.annotations
    )
    return Sample(Tensor(flipped), boxes)


def _gaussian_kernel(sigma: float) -> np.ndarray:
    radius = math.ceil(3.0 * sigma)
    xs = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-(xs * xs) / (2.0 * sigma * sigma))
    return k / k.sum()


def gaussian_blur(s: Sample, sigma: float) -> Sample:
    """Separable Gaussian with edge-replicate padding; boxes unchanged."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    k = _gaussian_kernel(sigma)
    r = (len(k) - 1) // 2
    img = s.image.data.astype(np.float64)
    padded = np.pad(img, ((r, r), (0, 0), (0, 0)), mode="edge")
    img = sum(k[t] * padded[t : t + img.shape[0]] for t in range(len(k)))
    padded = np.pad(img, ((0, 0), (r, r), (0, 0)), mode="edge")
    img = sum(k[t] * padded[:, t : t + img.shape[1]] for t in range(len(k)))
    return Sample(Tensor(np.clip(img, 0.0, 1.0).astype(np.float32)), s.annotations)


def gaussian_noise(s: Sample, stddev: float, seed: int) -> Sample:
    """Per pixel-channel i.i.d. zero-mean noise, clamped back to [0, 1]."""
    if stddev < 0:
        raise ValueError("stddev must be non-negative")
    if stddev == 0:
        return Sample(s.image, s.annotations)
    noise = normal_array(seed, s.image.data.size).reshape(s.image.shape) * stddev
    noisy = np.clip(s.image.data.astype(np.float64) + noise, 0.0, 1.0)
    return Sample(Tensor(noisy.astype(np.float32)), s.annotations)


def color_shift(s: Sample, delta: Sequence[float]) -> Sample:
    """Constant per-channel offset, clamped to [0, 1]; boxes unchanged."""
    delta = np.asarray(delta, dtype=np.float64)
    if delta.shape != (3,):
        raise ValueError("delta must have one entry per RGB channel")
    if np.any(np.abs(delta) > 1.0):
        raise ValueError("delta components must lie in [-1, 1]")
    shifted = np.clip(s.image.data.astype(np.float64) + delta, 0.0, 1.0)
    return Sample(Tensor(shifted.astype(np.float32)), s.annotations)


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def plan_augmentations(n: int, fraction: float, seed: int) -> List[Tuple[str, tuple] | None]:
    """Precomputed per-sample schedule: None (pass through) or
    (transform name, parameters). Separate from application so samples can
    be processed in parallel without changing the outcome."""
    if not 0.0 <= fraction <= 1.0:
        raise ValueError("fraction must lie in [0, 1]")
    stream = SplitMix64(seed)
    order = list(range(n))
    stream.shuffle(order)
    selected = set(order[: _round_half_up(fraction * n)])
    plan: List[Tuple[str, tuple] | None] = []
    for i in range(n):
        if i not in selected:
            plan.append(None)
            continue
        name = TRANSFORM_NAMES[stream.next_below(4)]
        if name == "blur":
            plan.append((name, (stream.uniform(*BLUR_SIGMA_RANGE),)))
        elif name == "flip":
            plan.append((name, ()))
        elif name == "noise":
            plan.append((name, (stream.uniform(*NOISE_STDDEV_RANGE), stream.next_u64())))
        else:
            plan.append((name, tuple(stream.uniform(-SHIFT_LIMIT, SHIFT_LIMIT) for _ in range(3))))
    return plan


def apply_planned(s: Sample, step: Tuple[str, tuple] | None) -> Sample:
    if step is None:
        return s
    name, params = step
    if name == "blur":
        return gaussian_blur(s, params[0])
    if name == "flip":
        return horizontal_flip(s)
    if name == "noise":
        return gaussian_noise(s, params[0], params[1])
    if name == "shift":
        return color_shift(s, params)
    raise ValueError(f"unknown transform {name!r}")


def augment_set(samples: Sequence[Sample], fraction: float = 0.5, seed: int = 0) -> List[Sample]:
    """Augment round(fraction * n) samples, one uniform transform each."""
    plan = plan_augmentations(len(samples), fraction, seed)
    return [apply_planned(s, step) for s, step in zip(samples, plan)]
