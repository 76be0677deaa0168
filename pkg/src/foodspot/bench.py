"""Per-frame performance profiling of the inference path.

Reports median and p95 wall/CPU time for forward + decode + NMS, the
decode + NMS slice alone, weight file size on disk, and peak resident
memory, next to the fixed mobile reference profile (non-binding comparison
points, not pass/fail gates).
"""

from __future__ import annotations

import os
import resource
import time
from dataclasses import dataclass
from statistics import median
from typing import Dict, List

from .boxes import nms
from .codec import decode
from .pipeline import Pipeline

# Reference profile of the mobile deployment this pipeline mirrors.
REFERENCE_PROFILE = {
    "cpu_ms": 15.0,
    "wall_ms": 75.0,
    "model_mb": 8.1,
    "memory_mb": 242.2,
}


@dataclass(frozen=True)
class BenchReport:
    iterations: int
    wall_ms_median: float
    wall_ms_p95: float
    cpu_ms_median: float
    cpu_ms_p95: float
    decode_nms_ms_median: float
    model_file_bytes: int
    peak_rss_bytes: int
    reference: Dict[str, float]


def _p95(values: List[float]) -> float:
    ordered = sorted(values)
    idx = min(len(ordered) - 1, int(round(0.95 * (len(ordered) - 1))))
    return ordered[idx]


def _peak_rss_bytes() -> int:
    # ru_maxrss is KiB on Linux
    return resource.getrusage(resource.RUSAGE_SELF).ru_maxrss * 1024


def run_bench(pipeline: Pipeline, image_bytes: bytes, iterations: int = 20) -> BenchReport:
    if iterations < 1:
        raise ValueError("iterations must be at least 1")
    cfg = pipeline.config
    raw, _, _ = pipeline.run_raw(image_bytes)

    wall_ms, cpu_ms = [], []
    for _ in range(iterations):
        w0, c0 = time.perf_counter(), time.process_time()
        raw_i, _, _ = pipeline.run_raw(image_bytes)
        dets = decode(raw_i, pipeline.anchors, cfg.grid_size, len(pipeline.labels), cfg.conf_threshold)
        nms(dets, cfg.nms_threshold)
        wall_ms.append((time.perf_counter() - w0) * 1000.0)
        cpu_ms.append((time.process_time() - c0) * 1000.0)

    decode_ms = []
    for _ in range(iterations):
        t0 = time.perf_counter()
        dets = decode(raw, pipeline.anchors, cfg.grid_size, len(pipeline.labels), cfg.conf_threshold)
        nms(dets, cfg.nms_threshold)
        decode_ms.append((time.perf_counter() - t0) * 1000.0)

    blob_path = os.path.splitext(pipeline.config.weights)[0] + ".bin"
    model_bytes = os.path.getsize(blob_path) if os.path.isfile(blob_path) else 0
    model_bytes += os.path.getsize(pipeline.config.weights)

    return BenchReport(
        iterations=iterations,
        wall_ms_median=median(wall_ms),
        wall_ms_p95=_p95(wall_ms),
        cpu_ms_median=median(cpu_ms),
        cpu_ms_p95=_p95(cpu_ms),
        decode_nms_ms_median=median(decode_ms),
        model_file_bytes=model_bytes,
        peak_rss_bytes=_peak_rss_bytes(),
        reference=dict(REFERENCE_PROFILE),
    )


def format_report(report: BenchReport) -> str:
    ref = report.reference
    lines = [
        f"frames measured        : {report.iterations}",
        f"wall time per frame    : median {report.wall_ms_median:.2f} ms, "
        f"p95 {report.wall_ms_p95:.2f} ms",
        f"cpu time per frame     : median {report.cpu_ms_median:.2f} ms, "
        f"p95 {report.cpu_ms_p95:.2f} ms",
        f"decode + nms only      : median {report.decode_nms_ms_median:.3f} ms",
        f"model size on disk     : {report.model_file_bytes / 1e6:.1f} MB",
        f"peak resident memory   : {report.peak_rss_bytes / 1e6:.1f} MB",
        "reference profile (mobile deployment, non-binding):",
        f"  cpu {ref['cpu_ms']:.0f} ms | wall {ref['wall_ms']:.0f} ms | "
        f"model {ref['model_mb']:.1f} MB | memory {ref['memory_mb']:.1f} MB",
    ]
    return "\n".join(lines)
