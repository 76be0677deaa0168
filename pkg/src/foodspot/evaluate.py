"""Detection scoring: greedy TP/FP matching, per-class AP, and mAP.

AP uses the all-points interpolation: the precision curve is made monotone
non-increasing from the right, then summed over recall steps. The mean is
taken over classes with at least one ground-truth instance.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

from .boxes import Detection, GroundTruth, iou


@dataclass(frozen=True)
class EvalReport:
    per_class_ap: Dict[int, float]
    map_score: float
    pr_points: Dict[int, List[Tuple[float, float]]]


def match_detections(
    dets: Sequence[Tuple[str, Detection]],
    gts: Sequence[GroundTruth],
    iou_threshold: float = 0.5,
) -> List[Tuple[Tuple[str, Detection], bool]]:
    """Flag each detection as TP or FP by greedy per-image, per-class matching.

    Detections are processed in confidence-descending order (ties by input
    position); each takes the highest-IoU unmatched same-class ground truth
    if that IoU reaches the threshold. Returns (detection, is_tp) in the
    processed order.
    """
    known_images = {gt.image_id for gt in gts}
    for image_id, _ in dets:
        if image_id not in known_images:
            raise ValueError(f"detection references unknown image id {image_id!r}")

    gt_boxes: Dict[Tuple[str, int], list] = {}
    for gt in gts:
        for box, class_id in gt.items:
            gt_boxes.setdefault((gt.image_id, class_id), []).append(box)
    matched: Dict[Tuple[str, int], set] = {key: set() for key in gt_boxes}

    order = sorted(range(len(dets)), key=lambda i: (-dets[i][1].confidence, i))
    results = []
    for i in order:
        image_id, det = dets[i]
        key = (image_id, det.class_id)
        candidates = gt_boxes.get(key, [])
        best_idx, best_iou = -1, 0.0
        for g_idx, g_box in enumerate(candidates):
            if g_idx in matched[key]:
                continue
            v = iou(det.box, g_box)
            if v > best_iou:
                best_idx, best_iou = g_idx, v
        is_tp = best_idx >= 0 and best_iou >= iou_threshold
        if is_tp:
            matched[key].add(best_idx)
        results.append(((image_id, det), is_tp))
    return results


def average_precision(
    matches: Sequence[Tuple[object, bool]], num_gt: int
) -> float:
    """All-points interpolated AP from confidence-ordered (detection, is_tp)."""
    if num_gt < 0:
        raise ValueError("num_gt must be non-negative")
    if num_gt == 0:
        return 0.0
    recalls, precisions = _pr_curve(matches, num_gt)
    return _envelope_area(recalls, precisions)


def _pr_curve(matches, num_gt) -> Tuple[List[float], List[float]]:
    recalls, precisions = [], []
    tp = 0
    for i, (_, flag) in enumerate(matches, start=1):
        tp += 1 if flag else 0
        recalls.append(tp / num_gt)
        precisions.append(tp / i)
    return recalls, precisions


def _envelope_area(recalls: List[float], precisions: List[float]) -> float:
    env = list(precisions)
    for i in range(len(env) - 2, -1, -1):
        env[i] = max(env[i], env[i + 1])
    area = 0.0
    prev_r = 0.0
    for r, p in zip(recalls, env):
        if r > prev_r:
            area += (r - prev_r) * p
            prev_r = r
    return area


def mean_average_precision(
    dets: Sequence[Tuple[str, Detection]],
    gts: Sequence[GroundTruth],
    iou_threshold: float = 0.5,
) -> EvalReport:
    """Unweighted mean of per-class AP over classes with ground truth."""
    flagged = match_detections(dets, gts, iou_threshold)
    gt_counts: Dict[int, int] = {}
    for gt in gts:
        for _, class_id in gt.items:
            gt_counts[class_id] = gt_counts.get(class_id, 0) + 1

    per_class_ap: Dict[int, float] = {}
    pr_points: Dict[int, List[Tuple[float, float]]] = {}
    for class_id, num_gt in sorted(gt_counts.items()):
        class_matches = [m for m in flagged if m[0][1].class_id == class_id]
        per_class_ap[class_id] = average_precision(class_matches, num_gt)
        pr_points[class_id] = list(zip(*_pr_curve(class_matches, num_gt))) if class_matches else []
    map_score = (
        sum(per_class_ap.values()) / len(per_class_ap) if per_class_ap else 0.0
    )
    return EvalReport(per_class_ap=per_class_ap, map_score=map_score, pr_points=pr_points)
