"""End-to-end detection pipeline: bytes in, detections + nutrition out.

The JSON body (detections, nutrition, image size) is canonical: compact
separators, sorted keys, UTF-8, one trailing newline. Identical inputs,
weights, and thresholds produce byte-identical output, which is what the
service/CLI parity tests pin down. Timing is measurement metadata, not part
of the canonical body; the CLI prints it to stderr and the HTTP service
returns it in headers.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from .boxes import BBox, Detection
from .codec import decode
from .dataio import read_anchors, read_labels, require_file
from .images import decode_image_bytes, resize_bilinear, to_unit_tensor
from .model import ModelSpec, build_mobilenet_yolo, forward
from .nutrition import (
    MealAnalysis,
    NutritionDatabase,
    NutritionService,
    RemoteNutritionClient,
    analyze,
)
from .boxes import nms
from .weights import ShapeMismatchError, WeightStore, load_weights_files


class LabelMismatchError(ValueError):
    """Weights were serialized for a different label/anchor count."""


@dataclass(frozen=True)
class PipelineConfig:
    weights: str
    anchors: str
    labels: str
    nutrition_db: str
    conf_threshold: float = 0.4
    nms_threshold: float = 0.3
    grid_size: int = 7
    input_resolution: int = 224

    def __post_init__(self):
        for name in ("conf_threshold", "nms_threshold"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ValueError(f"{name} must lie in (0, 1), got {v}")
        if self.grid_size < 1 or self.input_resolution < 1:
            raise ValueError("grid_size and input_resolution must be positive")

    @classmethod
    def from_file(cls, path: str, **overrides) -> "PipelineConfig":
        """Load a JSON config; relative paths resolve against the config file."""
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        base = os.path.dirname(os.path.abspath(path))
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"{path}: unknown config keys {sorted(unknown)}")
        doc.update({k: v for k, v in overrides.items() if v is not None})
        for key in ("weights", "anchors", "labels", "nutrition_db"):
            if key not in doc:
                raise ValueError(f"{path}: missing required key {key!r}")
            if not os.path.isabs(doc[key]):
                doc[key] = os.path.join(base, doc[key])
        return cls(**doc)


@dataclass(frozen=True)
class PixelBox:
    """Box in original-image pixels: top-left corner plus size."""

    x: float
    y: float
    width: float
    height: float


@dataclass(frozen=True)
class DetectedItem:
    box: PixelBox
    label: str
    class_id: int
    confidence: float


@dataclass(frozen=True)
class Timing:
    wall_ms: float
    cpu_ms: float


@dataclass(frozen=True)
class DetectResponse:
    detections: Tuple[DetectedItem, ...]
    nutrition: MealAnalysis
    image_width: int
    image_height: int
    timing: Timing

    def to_json_dict(self, include_timing: bool = False) -> Dict:
        doc = {
            "detections": [
                {
                    "box": {
                        "x": d.box.x,
                        "y": d.box.y,
                        "width": d.box.width,
                        "height": d.box.height,
                    },
                    "label": d.label,
                    "class_id": d.class_id,
                    "confidence": d.confidence,
                }
                for d in self.detections
            ],
            "image": {"width": self.image_width, "height": self.image_height},
            "nutrition": {
                "items": [
                    {
                        "label": facts.label,
                        "confidence": det.confidence,
                        "facts": _facts_dict(facts),
                    }
                    for det, facts in self.nutrition.items
                ],
                "totals": _facts_dict(self.nutrition.totals),
                "missing": list(self.nutrition.missing),
            },
        }
        if include_timing:
            doc["timing"] = {"wall_ms": self.timing.wall_ms, "cpu_ms": self.timing.cpu_ms}
        return doc

    def canonical_json(self, include_timing: bool = False) -> bytes:
        doc = self.to_json_dict(include_timing=include_timing)
        return (json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n").encode("utf-8")


def _facts_dict(facts) -> Dict:
    return {
        "label": facts.label,
        "serving_qty": facts.serving_qty,
        "serving_unit": facts.serving_unit,
        "calories": facts.calories,
        "total_fat": facts.total_fat,
        "carbohydrates": facts.carbohydrates,
        "protein": facts.protein,
        "sugars": facts.sugars,
        "sodium": facts.sodium,
    }


def normalized_to_pixel(box: BBox, width: int, height: int) -> PixelBox:
    """Center-normalized box -> pixel rect clamped to the image bounds."""
    left = (box.cx - box.w / 2.0) * width
    top = (box.cy - box.h / 2.0) * height
    right = (box.cx + box.w / 2.0) * width
    bottom = (box.cy + box.h / 2.0) * height
    left, right = max(left, 0.0), min(right, float(width))
    top, bottom = max(top, 0.0), min(bottom, float(height))
    return PixelBox(x=left, y=top, width=max(right - left, 0.0), height=max(bottom - top, 0.0))


def pixel_to_normalized(pb: PixelBox, width: int, height: int) -> BBox:
    return BBox(
        cx=(pb.x + pb.width / 2.0) / width,
        cy=(pb.y + pb.height / 2.0) / height,
        w=pb.width / width,
        h=pb.height / height,
    )


class Pipeline:
    """Loaded model + lookup tables; immutable shared state, safe to reuse
    across threads."""

    def __init__(self, config: PipelineConfig, remote_nutrition=None):
        self.config = config
        self.anchors = read_anchors(require_file(config.anchors, "anchors"))
        self.labels = read_labels(require_file(config.labels, "labels"))
        require_file(config.weights, "weights manifest")
        self.spec: ModelSpec = build_mobilenet_yolo(
            num_classes=len(self.labels), num_anchors=len(self.anchors)
        )
        if self.spec.grid_size != config.grid_size:
            raise ValueError(
                f"config grid_size {config.grid_size} unsupported; model uses "
                f"{self.spec.grid_size}"
            )
        if self.spec.input_resolution != config.input_resolution:
            raise ValueError(
                f"config input_resolution {config.input_resolution} unsupported; "
                f"model uses {self.spec.input_resolution}"
            )
        try:
            self.store: WeightStore = load_weights_files(config.weights, self.spec)
        except ShapeMismatchError as exc:
            raise LabelMismatchError(
                f"weight file does not fit {len(self.labels)} labels / "
                f"{len(self.anchors)} anchors: {exc}"
            ) from exc
        db = NutritionDatabase.from_file(require_file(config.nutrition_db, "nutrition db"))
        if remote_nutrition is None:
            remote_nutrition = RemoteNutritionClient.from_env()
        self.nutrition = NutritionService(db, remote_nutrition)

    def run_raw(self, image_bytes: bytes):
        """Decode + resize + forward; returns (raw vector, orig width, height)."""
        pixels = decode_image_bytes(image_bytes)
        orig_h, orig_w = pixels.shape[:2]
        resized = resize_bilinear(pixels, self.config.input_resolution, self.config.input_resolution)
        raw = forward(self.spec, self.store, to_unit_tensor(resized))
        return raw, orig_w, orig_h

    def detect_image(
        self,
        image_bytes: bytes,
        conf_threshold: Optional[float] = None,
        nms_threshold: Optional[float] = None,
        nutrition_source: str = "local",
    ) -> DetectResponse:
        conf = self.config.conf_threshold if conf_threshold is None else conf_threshold
        overlap = self.config.nms_threshold if nms_threshold is None else nms_threshold
        if not 0.0 < conf < 1.0 or not 0.0 < overlap < 1.0:
            raise ValueError("thresholds must lie in (0, 1)")

        pixels = decode_image_bytes(image_bytes)
        orig_h, orig_w = pixels.shape[:2]
        resized = resize_bilinear(pixels, self.config.input_resolution, self.config.input_resolution)
        tensor = to_unit_tensor(resized)

        wall0, cpu0 = time.perf_counter(), time.process_time()
        raw = forward(self.spec, self.store, tensor)
        dets: List[Detection] = nms(
            decode(raw, self.anchors, self.spec.grid_size, len(self.labels), conf),
            overlap,
        )
        timing = Timing(
            wall_ms=(time.perf_counter() - wall0) * 1000.0,
            cpu_ms=(time.process_time() - cpu0) * 1000.0,
        )

        meal = analyze(dets, self.labels, self.nutrition, source=nutrition_source)
        items = tuple(
            DetectedItem(
                box=normalized_to_pixel(d.box, orig_w, orig_h),
                label=self.labels[d.class_id],
                class_id=d.class_id,
                confidence=d.confidence,
            )
            for d in dets
        )
        return DetectResponse(
            detections=items,
            nutrition=meal,
            image_width=orig_w,
            image_height=orig_h,
            timing=timing,
        )
