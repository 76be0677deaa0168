"""Minimal dense-tensor engine for single-image CNN inference.

Feature maps are immutable (H, W, C) float32 arrays. All convolution
variants use SAME zero padding, accumulate in float64 and store results
in float32. Analytic parameter/multiply-accumulate counters live here too
so cost ratios between standard and depthwise-separable convolutions can
be checked in exact integer arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np


class ShapeError(ValueError):
    """Operand shapes are inconsistent with the operation contract."""


class NonFiniteError(ValueError):
    """An operand or result contains NaN or infinity."""


def _as_f64(name: str, arr: np.ndarray, shape: tuple) -> np.ndarray:
    arr = np.asarray(arr, dtype=np.float64)
    if arr.shape != shape:
        raise ShapeError(f"{name}: expected shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"{name} contains non-finite values")
    return arr


@dataclass(frozen=True)
class Tensor:
    """Dense H x W x C feature map, row-major (height, then width, then channel)."""

    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float32)
        if arr.ndim != 2 and arr.ndim != 3:
            raise ShapeError(f"tensor must be 2-D or 3-D, got ndim={arr.ndim}")
        if arr.ndim == 2:
            arr = arr[:, :, np.newaxis]
        if min(arr.shape) < 1:
            raise ShapeError(f"tensor dims must be positive, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise NonFiniteError("tensor contains non-finite values")
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    @property
    def shape(self) -> tuple:
        return self.data.shape

    def flat(self) -> np.ndarray:
        """Row-major flattening: height, then width, then channel."""
        return self.data.ravel()

    @classmethod
    def from_flat(cls, values: Sequence[float], height: int, width: int, channels: int) -> "Tensor":
        arr = np.asarray(values, dtype=np.float32)
        if arr.size != height * width * channels:
            raise ShapeError(
                f"flat length {arr.size} != {height}*{width}*{channels}"
            )
        return cls(arr.reshape(height, width, channels))

    def allclose(self, other: "Tensor", rtol: float = 1e-6, atol: float = 1e-6) -> bool:
        return self.shape == other.shape and bool(
            np.allclose(self.data, other.data, rtol=rtol, atol=atol)
        )


_KINDS = ("standard", "depthwise", "pointwise")


@dataclass(frozen=True)
class ConvSpec:
    """Declarative description of one convolution layer.

    kernel is the square filter side; depthwise uses one filter per input
    channel (channel multiplier 1), pointwise is the 1x1 cross-channel mix.
    """

    kind: str
    kernel: int
    in_channels: int
    out_channels: int
    stride: int = 1
    padding: str = "same"

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown conv kind {self.kind!r}")
        if self.kernel < 1 or self.in_channels < 1 or self.out_channels < 1 or self.stride < 1:
            raise ValueError("kernel, channels and stride must be positive")
        if self.padding != "same":
            raise ValueError("only SAME padding is supported")
        if self.kind == "pointwise" and self.kernel != 1:
            raise ValueError("pointwise convolution requires kernel == 1")
        if self.kind == "depthwise" and self.out_channels != self.in_channels:
            raise ValueError("depthwise convolution requires out_channels == in_channels")


def same_padding(in_dim: int, kernel: int, stride: int) -> tuple:
    """(low, high) zero padding so that the output dim is ceil(in/stride).

    total = max((ceil(in/stride) - 1) * stride + kernel - in, 0), with the
    odd pixel going to the high side.
    """
    out_dim = -(-in_dim // stride)
    total = max((out_dim - 1) * stride + kernel - in_dim, 0)
    low = total // 2
    return low, total - low


def _padded_windows(input: Tensor, kernel: int, stride: int) -> np.ndarray:
    """SAME-padded sliding windows, shape (Ho, Wo, C, k, k), float64."""
    pt, pb = same_padding(input.height, kernel, stride)
    pl, pr = same_padding(input.width, kernel, stride)
    padded = np.pad(
        input.data.astype(np.float64), ((pt, pb), (pl, pr), (0, 0)), mode="constant"
    )
    win = np.lib.stride_tricks.sliding_window_view(padded, (kernel, kernel), axis=(0, 1))
    return win[::stride, ::stride]


def _finish(acc: np.ndarray) -> Tensor:
    if not np.all(np.isfinite(acc)):
        raise NonFiniteError("convolution result overflowed to non-finite values")
    return Tensor(acc.astype(np.float32))


def conv2d_standard(
    input: Tensor,
    kernels: np.ndarray,
    bias: Optional[Sequence[float]] = None,
    stride: int = 1,
) -> Tensor:
    """Standard convolution: filters and mixes all input channels in one step.

    kernels has shape (k, k, in_channels, out_channels); bias, if given,
    has one entry per output channel.
    """
    kernels = np.asarray(kernels, dtype=np.float64)
    if kernels.ndim != 4 or kernels.shape[0] != kernels.shape[1]:
        raise ShapeError(f"standard kernels must be (k, k, M, N), got {kernels.shape}")
    k, _, m, n = kernels.shape
    kernels = _as_f64("kernels", kernels, (k, k, m, n))
    if input.channels != m:
        raise ShapeError(f"input has {input.channels} channels, kernels expect {m}")
    b = np.zeros(n) if bias is None else _as_f64("bias", np.asarray(bias), (n,))
    win = _padded_windows(input, k, stride)
    acc = np.einsum("hwmuv,uvmn->hwn", win, kernels) + b
    return _finish(acc)


def conv2d_depthwise(
    input: Tensor,
    kernels: np.ndarray,
    bias: Optional[Sequence[float]] = None,
    stride: int = 1,
) -> Tensor:
    """Depthwise convolution: channel c of the output depends only on channel c."""
    kernels = np.asarray(kernels, dtype=np.float64)
    if kernels.ndim != 3 or kernels.shape[0] != kernels.shape[1]:
        raise ShapeError(f"depthwise kernels must be (k, k, M), got {kernels.shape}")
    k, _, m = kernels.shape
    kernels = _as_f64("kernels", kernels, (k, k, m))
    if input.channels != m:
        raise ShapeError(f"input has {input.channels} channels, kernels expect {m}")
    b = np.zeros(m) if bias is None else _as_f64("bias", np.asarray(bias), (m,))
    win = _padded_windows(input, k, stride)
    acc = np.einsum("hwmuv,uvm->hwm", win, kernels) + b
    return _finish(acc)


def conv2d_pointwise(
    input: Tensor,
    kernels: np.ndarray,
    bias: Optional[Sequence[float]] = None,
) -> Tensor:
    """1x1 convolution: a shared linear map over each pixel's channel vector."""
    kernels = np.asarray(kernels, dtype=np.float64)
    if kernels.ndim != 2:
        raise ShapeError(f"pointwise kernels must be (M, N), got {kernels.shape}")
    m, n = kernels.shape
    kernels = _as_f64("kernels", kernels, (m, n))
    if input.channels != m:
        raise ShapeError(f"input has {input.channels} channels, kernels expect {m}")
    b = np.zeros(n) if bias is None else _as_f64("bias", np.asarray(bias), (n,))
    acc = input.data.astype(np.float64) @ kernels + b
    return _finish(acc)


def batchnorm(
    input: Tensor,
    gamma: Sequence[float],
    beta: Sequence[float],
    mean: Sequence[float],
    variance: Sequence[float],
    epsilon: float = 1e-5,
) -> Tensor:
    """Inference-mode normalization with stored statistics, per channel."""
    c = input.channels
    g = _as_f64("gamma", np.asarray(gamma), (c,))
    b = _as_f64("beta", np.asarray(beta), (c,))
    mu = _as_f64("mean", np.asarray(mean), (c,))
    var = _as_f64("variance", np.asarray(variance), (c,))
    if np.any(var < 0):
        raise ValueError("variance must be non-negative")
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    denom = np.sqrt(var + epsilon)
    if np.any(denom == 0):
        raise ValueError("variance + epsilon must be positive in every channel")
    acc = g * (input.data.astype(np.float64) - mu) / denom + b
    return _finish(acc)


def relu(input: Tensor) -> Tensor:
    return Tensor(np.maximum(input.data, np.float32(0.0)))


def fully_connected(input: Tensor, weights: np.ndarray, bias: Sequence[float]) -> np.ndarray:
    """Affine map over the row-major flattened input; no activation.

    weights has shape (out_features, flattened_length). Returns a float32
    vector of length out_features.
    """
    weights = np.asarray(weights, dtype=np.float64)
    if weights.ndim != 2:
        raise ShapeError(f"weights must be 2-D, got {weights.shape}")
    flat = input.flat().astype(np.float64)
    if weights.shape[1] != flat.size:
        raise ShapeError(
            f"weights have {weights.shape[1]} columns, flattened input has {flat.size}"
        )
    weights = _as_f64("weights", weights, weights.shape)
    b = _as_f64("bias", np.asarray(bias), (weights.shape[0],))
    out = weights @ flat + b
    if not np.all(np.isfinite(out)):
        raise NonFiniteError("fully_connected result overflowed to non-finite values")
    return out.astype(np.float32)


def param_count(spec: ConvSpec, include_bias: bool = False) -> int:
    """Learned parameters of one convolution. Bias excluded by default,
    matching the separable-vs-standard ratio convention."""
    k2 = spec.kernel * spec.kernel
    if spec.kind == "standard":
        n = k2 * spec.in_channels * spec.out_channels
    elif spec.kind == "depthwise":
        n = k2 * spec.in_channels
    else:
        n = spec.in_channels * spec.out_channels
    if include_bias:
        n += spec.out_channels
    return n


def flop_count(spec: ConvSpec, feature_dim: int) -> int:
    """Multiply-accumulate count on a square feature map of side feature_dim.

    With stride 1 this is the textbook cost expression; for strided layers
    the output grid ceil(feature_dim / stride) is used.
    """
    if feature_dim < 1:
        raise ValueError("feature_dim must be positive")
    out_dim = -(-feature_dim // spec.stride)
    positions = out_dim * out_dim
    return param_count(spec) * positions
