"""Declarative network architecture and the forward pass.

The canonical detector backbone is the MobileNet v1 progression: a stride-2
standard convolution into 13 depthwise-separable blocks (depthwise conv +
pointwise conv, each followed by batchnorm and ReLU), taking a 224x224x3
image down to a 7x7x1024 map through five stride-2 stages. The head is a
1x1 standard convolution compressing to 256 channels, a per-cell fully
connected layer with no nonlinearity producing the anchors-by-classes
channels, and a parameterless output layer that flattens the grid into the
detector's raw output vector.

Counting depthwise and pointwise convolutions as separate layers and the
output layer as the final one, the canonical build is exactly 30 layers:
1 stem conv + 26 block convs + 1 head conv + 1 fully connected + 1 output.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Tuple, Union

import numpy as np

from .tensor import (
    ConvSpec,
    Tensor,
    batchnorm,
    conv2d_depthwise,
    conv2d_pointwise,
    conv2d_standard,
    fully_connected,
    param_count,
    relu,
)

BN_EPSILON = 1e-5

# MobileNet-1.0 block table: (depthwise stride, pointwise output channels)
_BLOCKS = [
    (1, 64),
    (2, 128),
    (1, 128),
    (2, 256),
    (1, 256),
    (2, 512),
    (1, 512),
    (1, 512),
    (1, 512),
    (1, 512),
    (1, 512),
    (2, 1024),
    (1, 1024),
]
_STEM_CHANNELS = 32
_HEAD_CHANNELS = 256


@dataclass(frozen=True)
class ConvLayer:
    spec: ConvSpec
    use_batchnorm: bool = True
    use_relu: bool = True
    use_bias: bool = False


@dataclass(frozen=True)
class DenseLayer:
    """Fully connected map applied to each grid cell's feature vector
    (weights shared across cells); no activation."""

    in_features: int
    out_features: int


@dataclass(frozen=True)
class YoloOutputLayer:
    """Parameterless: flattens the (S, S, anchors*(5+classes)) grid row-major."""


LayerSpec = Union[ConvLayer, DenseLayer, YoloOutputLayer]


@dataclass(frozen=True)
class ModelSpec:
    layers: Tuple[LayerSpec, ...]
    num_classes: int
    num_anchors: int = 5
    input_resolution: int = 224
    grid_size: int = 7

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        if self.num_classes < 1 or self.num_anchors < 1:
            raise ValueError("num_classes and num_anchors must be positive")
        if self.input_resolution < 1 or self.grid_size < 1:
            raise ValueError("input_resolution and grid_size must be positive")
        if self.layers:
            self._check_architecture()

    def _check_architecture(self):
        dim = self.input_resolution
        channels = 3
        last_param_layer = None
        for layer in self.layers:
            if isinstance(layer, ConvLayer):
                if layer.spec.in_channels != channels:
                    raise ValueError(
                        f"layer expects {layer.spec.in_channels} channels, gets {channels}"
                    )
                channels = layer.spec.out_channels
                dim = -(-dim // layer.spec.stride)
                last_param_layer = layer
            elif isinstance(layer, DenseLayer):
                if layer.in_features != channels:
                    raise ValueError(
                        f"dense layer expects {layer.in_features} features, gets {channels}"
                    )
                channels = layer.out_features
                last_param_layer = layer
            elif isinstance(layer, YoloOutputLayer):
                if channels != self.num_anchors * (5 + self.num_classes):
                    raise ValueError(
                        f"output layer needs {self.num_anchors * (5 + self.num_classes)} "
                        f"channels, gets {channels}"
                    )
        if dim != self.grid_size:
            raise ValueError(
                f"downsampling reaches {dim}, grid size is {self.grid_size}"
            )
        if isinstance(last_param_layer, ConvLayer) and last_param_layer.use_relu:
            raise ValueError("final parameterized layer must have no nonlinearity")

    @property
    def output_length(self) -> int:
        return self.grid_size * self.grid_size * self.num_anchors * (5 + self.num_classes)

    def layer_count(self) -> int:
        """Depthwise and pointwise convolutions count separately."""
        return len(self.layers)


def build_mobilenet_yolo(num_classes: int, num_anchors: int = 5) -> ModelSpec:
    """The canonical 30-layer detector for a 7x7 grid at 224x224 input."""
    if num_classes < 1 or num_anchors < 1:
        raise ValueError("num_classes and num_anchors must be positive")
    layers: List[LayerSpec] = [
        ConvLayer(ConvSpec("standard", 3, 3, _STEM_CHANNELS, stride=2))
    ]
    channels = _STEM_CHANNELS
    for stride, out_channels in _BLOCKS:
        layers.append(ConvLayer(ConvSpec("depthwise", 3, channels, channels, stride=stride)))
        layers.append(ConvLayer(ConvSpec("pointwise", 1, channels, out_channels)))
        channels = out_channels
    layers.append(ConvLayer(ConvSpec("standard", 1, channels, _HEAD_CHANNELS)))
    head_width = num_anchors * (5 + num_classes)
    layers.append(DenseLayer(_HEAD_CHANNELS, head_width))
    layers.append(YoloOutputLayer())
    return ModelSpec(
        layers=tuple(layers),
        num_classes=num_classes,
        num_anchors=num_anchors,
    )


def parameter_breakdown(spec: ModelSpec) -> List[Dict]:
    """Per-layer parameter accounting; batchnorm statistics reported apart
    from its trainable scale/shift."""
    rows = []
    for idx, layer in enumerate(spec.layers):
        row: Dict = {"layer": idx, "kind": _kind_name(layer)}
        if isinstance(layer, ConvLayer):
            row["kernel"] = param_count(layer.spec)
            row["bias"] = layer.spec.out_channels if layer.use_bias else 0
            row["batchnorm_trainable"] = 2 * layer.spec.out_channels if layer.use_batchnorm else 0
            row["batchnorm_stats"] = 2 * layer.spec.out_channels if layer.use_batchnorm else 0
        elif isinstance(layer, DenseLayer):
            row["kernel"] = layer.in_features * layer.out_features
            row["bias"] = layer.out_features
            row["batchnorm_trainable"] = 0
            row["batchnorm_stats"] = 0
        else:
            row["kernel"] = row["bias"] = 0
            row["batchnorm_trainable"] = row["batchnorm_stats"] = 0
        row["total"] = (
            row["kernel"] + row["bias"] + row["batchnorm_trainable"] + row["batchnorm_stats"]
        )
        rows.append(row)
    return rows


def count_parameters(spec: ModelSpec) -> int:
    return sum(row["total"] for row in parameter_breakdown(spec))


def _kind_name(layer: LayerSpec) -> str:
    if isinstance(layer, ConvLayer):
        return layer.spec.kind
    if isinstance(layer, DenseLayer):
        return "dense"
    return "yolo_output"


def forward(spec: ModelSpec, store, image: Tensor) -> np.ndarray:
    """Run the network; returns the raw float32 output vector.

    The image must already be input_resolution x input_resolution x 3 with
    values in [0, 1]; resizing is the caller's job.
    """
    if (image.height, image.width) != (spec.input_resolution, spec.input_resolution):
        raise ValueError(
            f"expected {spec.input_resolution}x{spec.input_resolution} input, "
            f"got {image.height}x{image.width}"
        )
    if image.channels != 3:
        raise ValueError(f"expected 3 input channels, got {image.channels}")
    x = image
    out: np.ndarray | None = None
    for idx, layer in enumerate(spec.layers):
        name = f"L{idx:02d}"
        if isinstance(layer, ConvLayer):
            kernel = store[f"{name}.kernel"]
            bias = store[f"{name}.bias"] if layer.use_bias else None
            if layer.spec.kind == "standard":
                x = conv2d_standard(x, kernel, bias, stride=layer.spec.stride)
            elif layer.spec.kind == "depthwise":
                x = conv2d_depthwise(x, kernel, bias, stride=layer.spec.stride)
            else:
                x = conv2d_pointwise(x, kernel, bias)
            if layer.use_batchnorm:
                x = batchnorm(
                    x,
                    store[f"{name}.gamma"],
                    store[f"{name}.beta"],
                    store[f"{name}.mean"],
                    store[f"{name}.variance"],
                    epsilon=BN_EPSILON,
                )
            if layer.use_relu:
                x = relu(x)
        elif isinstance(layer, DenseLayer):
            weights = store[f"{name}.kernel"]
            bias = store[f"{name}.bias"]
            cells = np.empty((x.height, x.width, layer.out_features), dtype=np.float32)
            for r in range(x.height):
                for c in range(x.width):
                    cell = Tensor(x.data[r : r + 1, c : c + 1, :])
                    cells[r, c, :] = fully_connected(cell, weights, bias)
            x = Tensor(cells)
        else:
            out = x.flat().copy()
    if out is None:
        raise ValueError("model has no output layer")
    if out.size != spec.output_length:
        raise ValueError(
            f"output length {out.size} does not match expected {spec.output_length}"
        )
    return out
