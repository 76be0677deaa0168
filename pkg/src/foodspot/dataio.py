"""Line-oriented text formats shared by the CLI stages.

ground truth   image_id class_id cx cy w h      (normalized floats)
detections     image_id class_id confidence cx cy w h
anchors        w h                              (grid-cell units)
labels         one label per line, class id = line index

Blank lines and lines starting with '#' are ignored everywhere.
"""

from __future__ import annotations

import os
from typing import Dict, List, Sequence, Tuple

from .boxes import Anchor, BBox, Detection, GroundTruth


class ParseError(ValueError):
    def __init__(self, path: str, line_no: int, message: str):
        super().__init__(f"{path}:{line_no}: {message}")
        self.path = path
        self.line_no = line_no


def _rows(path: str) -> List[Tuple[int, List[str]]]:
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for i, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            rows.append((i, stripped.split()))
    return rows


def read_ground_truth(path: str) -> List[GroundTruth]:
    """Parse an annotation file, grouping boxes by image in file order."""
    grouped: Dict[str, list] = {}
    order: List[str] = []
    for line_no, parts in _rows(path):
        if len(parts) != 6:
            raise ParseError(path, line_no, f"expected 6 fields, got {len(parts)}")
        image_id = parts[0]
        try:
            class_id = int(parts[1])
            cx, cy, w, h = (float(v) for v in parts[2:])
            box = BBox(cx, cy, w, h)
        except ValueError as exc:
            raise ParseError(path, line_no, str(exc)) from exc
        if image_id not in grouped:
            grouped[image_id] = []
            order.append(image_id)
        grouped[image_id].append((box, class_id))
    return [GroundTruth(image_id, tuple(grouped[image_id])) for image_id in order]


def write_ground_truth(path: str, gts: Sequence[GroundTruth]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for gt in gts:
            for box, class_id in gt.items:
                fh.write(
                    f"{gt.image_id} {class_id} {box.cx:.8f} {box.cy:.8f} "
                    f"{box.w:.8f} {box.h:.8f}\n"
                )


def read_detections(path: str) -> List[Tuple[str, Detection]]:
    out = []
    for line_no, parts in _rows(path):
        if len(parts) != 7:
            raise ParseError(path, line_no, f"expected 7 fields, got {len(parts)}")
        try:
            det = Detection(
                box=BBox(*(float(v) for v in parts[3:])),
                class_id=int(parts[1]),
                confidence=float(parts[2]),
            )
        except ValueError as exc:
            raise ParseError(path, line_no, str(exc)) from exc
        out.append((parts[0], det))
    return out


def read_anchors(path: str) -> List[Anchor]:
    anchors = []
    for line_no, parts in _rows(path):
        if len(parts) != 2:
            raise ParseError(path, line_no, f"expected 2 fields, got {len(parts)}")
        try:
            anchors.append(Anchor(float(parts[0]), float(parts[1])))
        except ValueError as exc:
            raise ParseError(path, line_no, str(exc)) from exc
    if not anchors:
        raise ParseError(path, 0, "no anchors in file")
    return anchors


def write_anchors(path: str, anchors: Sequence[Anchor]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for a in anchors:
            fh.write(f"{a.w:.6f} {a.h:.6f}\n")


def read_labels(path: str) -> List[str]:
    labels = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            stripped = line.strip()
            if stripped:
                labels.append(stripped)
    if not labels:
        raise ParseError(path, 0, "no labels in file")
    return labels


def require_file(path: str, role: str) -> str:
    if not os.path.isfile(path):
        raise FileNotFoundError(f"{role} file not found: {path}")
    return path
