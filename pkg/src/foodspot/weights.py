"""Weight storage and the manifest + blob serialization format.

The blob is every array in manifest order as little-endian float32, with
the low 8 bytes of the payload's SHA-256 appended as a trailing checksum.
The manifest is a JSON index of (name, shape, byte offset, length) plus the
checksum in hex, so a reader can locate and verify any array without
library code. See the README for a worked byte-level example.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np

from .model import ConvLayer, DenseLayer, ModelSpec
from .rng import SplitMix64, uniform_array

MAGIC = "foodspot-weights-v1"
_ROLE_ORDER = ("kernel", "bias", "gamma", "beta", "mean", "variance")


class WeightFormatError(ValueError):
    """Manifest or blob does not follow the documented format."""


class ShapeMismatchError(WeightFormatError):
    """An array's manifest shape disagrees with the model spec."""


class TruncatedBlobError(WeightFormatError):
    """The blob ends before a manifest entry (or the checksum trailer)."""


class ChecksumMismatchError(WeightFormatError):
    """Payload bytes do not hash to the recorded checksum."""


@dataclass(frozen=True)
class WeightStore:
    """Named float32 arrays keyed by layer index and role, e.g. 'L03.kernel'."""

    arrays: Dict[str, np.ndarray]
    checksum: str = ""

    def __post_init__(self):
        frozen = {}
        for name, arr in self.arrays.items():
            arr = np.ascontiguousarray(arr, dtype=np.float32)
            arr.setflags(write=False)
            frozen[name] = arr
        object.__setattr__(self, "arrays", frozen)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.arrays[name]

    def names(self) -> List[str]:
        return list(self.arrays)


def expected_arrays(spec: ModelSpec) -> List[Tuple[str, Tuple[int, ...]]]:
    """(name, shape) pairs in canonical manifest order."""
    out: List[Tuple[str, Tuple[int, ...]]] = []
    for idx, layer in enumerate(spec.layers):
        name = f"L{idx:02d}"
        if isinstance(layer, ConvLayer):
            s = layer.spec
            if s.kind == "standard":
                kshape = (s.kernel, s.kernel, s.in_channels, s.out_channels)
            elif s.kind == "depthwise":
                kshape = (s.kernel, s.kernel, s.in_channels)
            else:
                kshape = (s.in_channels, s.out_channels)
            out.append((f"{name}.kernel", kshape))
            if layer.use_bias:
                out.append((f"{name}.bias", (s.out_channels,)))
            if layer.use_batchnorm:
                for role in ("gamma", "beta", "mean", "variance"):
                    out.append((f"{name}.{role}", (s.out_channels,)))
        elif isinstance(layer, DenseLayer):
            out.append((f"{name}.kernel", (layer.out_features, layer.in_features)))
            out.append((f"{name}.bias", (layer.out_features,)))
    return out


def _payload_checksum(payload: bytes) -> bytes:
    return hashlib.sha256(payload).digest()[:8]


def save_weights(store: WeightStore, spec: ModelSpec) -> Tuple[str, bytes]:
    """Serialize to (manifest JSON text, blob bytes)."""
    entries = []
    chunks = []
    offset = 0
    for name, shape in expected_arrays(spec):
        if name not in store.arrays:
            raise WeightFormatError(f"store is missing array {name}")
        arr = store.arrays[name]
        if arr.shape != shape:
            raise ShapeMismatchError(
                f"{name}: store shape {arr.shape} != spec shape {shape}"
            )
        raw = arr.astype("<f4").tobytes()
        entries.append(
            {"name": name, "shape": list(shape), "offset": offset, "length": len(raw)}
        )
        chunks.append(raw)
        offset += len(raw)
    payload = b"".join(chunks)
    checksum = _payload_checksum(payload)
    manifest = json.dumps(
        {
            "format": MAGIC,
            "dtype": "float32",
            "byte_order": "little",
            "checksum_sha256_64": checksum.hex(),
            "arrays": entries,
        },
        indent=2,
    )
    return manifest, payload + checksum


def load_weights(manifest: str, blob: bytes, spec: ModelSpec) -> WeightStore:
    """Parse and verify; raises a distinct error per failure mode."""
    try:
        doc = json.loads(manifest)
    except json.JSONDecodeError as exc:
        raise WeightFormatError(f"manifest is not valid JSON: {exc}") from exc
    if doc.get("format") != MAGIC:
        raise WeightFormatError(f"unknown weight format {doc.get('format')!r}")

    expected = expected_arrays(spec)
    listed = [(e["name"], tuple(e["shape"])) for e in doc["arrays"]]
    if [n for n, _ in listed] != [n for n, _ in expected]:
        raise ShapeMismatchError(
            f"manifest lists arrays {[n for n, _ in listed]}, "
            f"spec expects {[n for n, _ in expected]}"
        )
    for (name, shape), (_, want) in zip(listed, expected):
        if shape != want:
            raise ShapeMismatchError(f"{name}: manifest shape {shape} != spec shape {want}")

    payload_len = sum(e["length"] for e in doc["arrays"])
    if len(blob) < payload_len + 8:
        offending = next(
            (
                e["name"]
                for e in doc["arrays"]
                if e["offset"] + e["length"] > len(blob) - 8
            ),
            doc["arrays"][-1]["name"] if doc["arrays"] else "<empty>",
        )
        raise TruncatedBlobError(
            f"blob has {len(blob)} bytes, needs {payload_len + 8}; "
            f"array {offending} is incomplete"
        )
    payload, trailer = blob[:payload_len], blob[payload_len : payload_len + 8]
    checksum = _payload_checksum(payload)
    if trailer != checksum or doc.get("checksum_sha256_64") != checksum.hex():
        raise ChecksumMismatchError(
            f"payload hashes to {checksum.hex()}, manifest/trailer disagree"
        )

    arrays = {}
    for e in doc["arrays"]:
        raw = payload[e["offset"] : e["offset"] + e["length"]]
        n = int(np.prod(e["shape"])) if e["shape"] else 1
        if len(raw) != 4 * n:
            raise ShapeMismatchError(
                f"{e['name']}: {len(raw)} bytes cannot hold shape {e['shape']}"
            )
        arrays[e["name"]] = np.frombuffer(raw, dtype="<f4").reshape(e["shape"])
    return WeightStore(arrays=arrays, checksum=checksum.hex())


def save_weights_files(store: WeightStore, spec: ModelSpec, manifest_path: str) -> str:
    """Write manifest JSON plus the blob next to it (.bin); returns blob path."""
    manifest, blob = save_weights(store, spec)
    blob_path = os.path.splitext(manifest_path)[0] + ".bin"
    doc = json.loads(manifest)
    doc["blob_file"] = os.path.basename(blob_path)
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
    with open(blob_path, "wb") as fh:
        fh.write(blob)
    return blob_path


def load_weights_files(manifest_path: str, spec: ModelSpec) -> WeightStore:
    with open(manifest_path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    blob_file = doc.get("blob_file")
    if not blob_file:
        raise WeightFormatError("manifest has no blob_file entry")
    blob_path = os.path.join(os.path.dirname(os.path.abspath(manifest_path)), blob_file)
    if not os.path.isfile(blob_path):
        raise FileNotFoundError(f"weight blob not found: {blob_path}")
    with open(blob_path, "rb") as fh:
        blob = fh.read()
    return load_weights(json.dumps(doc), blob, spec)


def generate_weights(spec: ModelSpec, seed: int) -> WeightStore:
    """Procedural reference weights from a splitmix64 stream.

    Not trained; magnitudes are fan-in scaled so activations stay bounded
    through the stack, and batchnorm statistics are near-identity.
    """
    fan_ins = _kernel_fan_ins(spec)
    master = SplitMix64(seed)
    arrays = {}
    for name, shape in expected_arrays(spec):
        n = int(np.prod(shape))
        sub = master.next_u64()
        u = uniform_array(sub, n)
        role = name.split(".")[1]
        if role == "kernel":
            scale = math.sqrt(3.0 / fan_ins[name])
            values = (2.0 * u - 1.0) * scale
        elif role == "bias":
            values = (2.0 * u - 1.0) * 0.05
        elif role == "gamma":
            values = 0.9 + 0.2 * u
        elif role == "beta":
            values = (2.0 * u - 1.0) * 0.05
        elif role == "mean":
            values = (2.0 * u - 1.0) * 0.05
        else:  # variance
            values = 0.5 + u
        arrays[name] = values.astype(np.float32).reshape(shape)
    store = WeightStore(arrays=arrays)
    _, blob = save_weights(store, spec)
    return WeightStore(arrays=arrays, checksum=blob[-8:].hex())


def _kernel_fan_ins(spec: ModelSpec) -> Dict[str, int]:
    fan = {}
    for idx, layer in enumerate(spec.layers):
        name = f"L{idx:02d}.kernel"
        if isinstance(layer, ConvLayer):
            s = layer.spec
            if s.kind == "depthwise":
                fan[name] = s.kernel * s.kernel
            else:
                fan[name] = s.kernel * s.kernel * s.in_channels
        elif isinstance(layer, DenseLayer):
            fan[name] = layer.in_features
    return fan
