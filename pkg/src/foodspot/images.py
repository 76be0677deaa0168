"""Image byte/file handling around Pillow: decode, resize, PPM output."""

from __future__ import annotations

import io

import numpy as np
from PIL import Image, UnidentifiedImageError

from .tensor import Tensor


class ImageDecodeError(ValueError):
    """Input bytes are not a decodable image."""


def decode_image_bytes(data: bytes) -> np.ndarray:
    """Bytes (PPM, PNG, JPEG, ...) -> uint8 RGB array (H, W, 3)."""
    try:
        with Image.open(io.BytesIO(data)) as img:
            return np.asarray(img.convert("RGB"), dtype=np.uint8)
    except (UnidentifiedImageError, OSError, ValueError) as exc:
        raise ImageDecodeError(f"cannot decode image: {exc}") from exc


def load_image(path: str) -> np.ndarray:
    with open(path, "rb") as fh:
        return decode_image_bytes(fh.read())


def resize_bilinear(pixels: np.ndarray, width: int, height: int) -> np.ndarray:
    """Plain bilinear stretch (no letterboxing), uint8 in and out."""
    img = Image.fromarray(pixels, mode="RGB")
    return np.asarray(img.resize((width, height), Image.BILINEAR), dtype=np.uint8)


def to_unit_tensor(pixels: np.ndarray) -> Tensor:
    return Tensor((pixels.astype(np.float32) / 255.0))


def tensor_to_u8(t: Tensor) -> np.ndarray:
    return np.clip(np.rint(t.data * 255.0), 0, 255).astype(np.uint8)


def save_ppm(path: str, t: Tensor) -> None:
    Image.fromarray(tensor_to_u8(t), mode="RGB").save(path, format="PPM")
