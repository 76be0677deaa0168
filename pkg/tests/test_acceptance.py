"""Acceptance suite: one test per shipping criterion, each printing a
pass/fail line with its runtime (run with `pytest -s` to see the lines).

Criterion 01b is a known, documented failure: the stated requirement
"standard/separable FLOP factor in [8, 9) for all N >= 64" contradicts the
exact ratio identity the same criterion pins down, because the factor is
9N/(N+9) for 3x3 filters, which only reaches 8 at N = 72. The test asserts
the requirement verbatim and is marked strict-xfail; 01c checks the
corrected boundary.
"""

import json
import time
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction

import numpy as np
import pytest
from fastapi.testclient import TestClient

from conftest import ANCHOR_FIXTURE
from foodspot.anchors import avg_iou_curve
from foodspot.augment import plan_augmentations
from foodspot.bench import format_report, run_bench
from foodspot.boxes import Anchor, BBox, Detection, GroundTruth, iou, nms
from foodspot.cli import main as cli_main
from foodspot.codec import decode, encode
from foodspot.evaluate import average_precision, match_detections
from foodspot.model import ConvLayer, build_mobilenet_yolo, count_parameters
from foodspot.pipeline import Pipeline, PipelineConfig
from foodspot.service import create_app
from foodspot.tensor import ConvSpec, Tensor, conv2d_depthwise, conv2d_pointwise, conv2d_standard, flop_count, param_count
from oracles import ap_integrator, brute_nms, naive_conv2d, naive_depthwise

from test_anchors import load_fixture as load_cluster_fixture


def _report(name: str, t0: float, budget: float, detail: str = ""):
    elapsed = time.perf_counter() - t0
    suffix = f" — {detail}" if detail else ""
    print(f"[PASS] {name} ({elapsed:.2f}s < {budget:.0f}s){suffix}", flush=True)
    assert elapsed < budget, f"{name}: {elapsed:.2f}s exceeded the {budget}s budget"


def test_acceptance_01a_cost_formula_exact_ratios():
    t0 = time.perf_counter()
    rng = np.random.default_rng(11)
    for dk in (1, 3, 5, 7):
        for _ in range(60):
            m = int(rng.integers(1, 513))
            n = int(rng.integers(1, 513))
            df = int(rng.integers(1, 65))
            p_std = param_count(ConvSpec("standard", dk, m, n))
            p_sep = param_count(ConvSpec("depthwise", dk, m, m)) + param_count(
                ConvSpec("pointwise", 1, m, n)
            )
            assert Fraction(p_sep, p_std) == Fraction(1, n) + Fraction(1, dk * dk)
            f_std = flop_count(ConvSpec("standard", dk, m, n), df)
            f_sep = flop_count(ConvSpec("depthwise", dk, m, m), df) + flop_count(
                ConvSpec("pointwise", 1, m, n), df
            )
            assert Fraction(f_sep, f_std) == Fraction(1, n) + Fraction(1, dk * dk)
    _report("01a cost-formula fidelity: exact rational ratios", t0, 1.0)


@pytest.mark.xfail(
    strict=True,
    reason="stated bound is unattainable: the same criterion fixes the ratio "
    "1/N + 1/9, so the factor is 9N/(N+9), which is below 8 for N in "
    "[64, 72); e.g. factor(64) = 576/73 = 7.890. The interval [8, 9) "
    "holds exactly for N >= 72 (see 01c).",
)
def test_acceptance_01b_speedup_interval_as_stated():
    t0 = time.perf_counter()
    failures = []
    for n in range(64, 513):
        factor = Fraction(flop_count(ConvSpec("standard", 3, 32, n), 14),
                          flop_count(ConvSpec("depthwise", 3, 32, 32), 14)
                          + flop_count(ConvSpec("pointwise", 1, 32, n), 14))
        if not (8 <= factor < 9):
            failures.append((n, float(factor)))
    ok = not failures
    elapsed = time.perf_counter() - t0
    status = "PASS" if ok else "FAIL"
    detail = "" if ok else f" — factor < 8 for N in [64, 72): {failures[:3]}..."
    print(f"[{status}] 01b speedup factor in [8,9) for all N >= 64, as stated "
          f"({elapsed:.2f}s < 1s){detail}", flush=True)
    assert ok, f"standard/separable factor leaves [8, 9) at {failures[:8]}"


def test_acceptance_01c_speedup_interval_corrected_boundary():
    t0 = time.perf_counter()
    for n in range(72, 513):
        factor = Fraction(9 * n, n + 9)
        assert 8 <= factor < 9
    for n in range(64, 72):
        assert Fraction(9 * n, n + 9) < 8
    _report("01c speedup factor in [8,9) for all N >= 72 (corrected boundary)", t0, 1.0,
            "8-to-9x saving confirmed on the valid domain")


def test_acceptance_02_architecture_accounting():
    t0 = time.perf_counter()
    spec = build_mobilenet_yolo(100, 5)
    assert spec.layer_count() == 30
    total = count_parameters(spec)
    assert 3.15e6 <= total <= 3.85e6
    dim = spec.input_resolution
    for layer in spec.layers:
        if isinstance(layer, ConvLayer):
            dim = -(-dim // layer.spec.stride)
    assert dim == 7
    _report("02 architecture accounting", t0, 1.0,
            f"30 layers, {total:,} parameters, 224 -> 7")


def test_acceptance_03_convolution_correctness():
    t0 = time.perf_counter()
    rng = np.random.default_rng(23)
    rel = 1e-6
    for i in range(200):
        h, w = int(rng.integers(1, 9)), int(rng.integers(1, 9))
        m, n = int(rng.integers(1, 7)), int(rng.integers(1, 7))
        k = int(rng.choice([1, 3, 5]))
        stride = int(rng.choice([1, 2]))
        x = Tensor(rng.uniform(-1, 1, (h, w, m)).astype(np.float32))
        if i % 2 == 0:
            kern = rng.uniform(-1, 1, (k, k, m, n))
            bias = rng.uniform(-1, 1, n)
            got = conv2d_standard(x, kern, bias, stride=stride).data
            want = naive_conv2d(x.data, kern, bias, stride=stride)
        else:
            kern = rng.uniform(-1, 1, (k, k, m))
            bias = rng.uniform(-1, 1, m)
            got = conv2d_depthwise(x, kern, bias, stride=stride).data
            want = naive_depthwise(x.data, kern, bias, stride=stride)
        assert np.allclose(got, want, rtol=rel, atol=1e-8)
    for _ in range(50):
        h, w = int(rng.integers(2, 9)), int(rng.integers(2, 9))
        m, n = int(rng.integers(1, 7)), int(rng.integers(1, 7))
        stride = int(rng.choice([1, 2]))
        x = Tensor(rng.uniform(-1, 1, (h, w, m)).astype(np.float32))
        dk = rng.uniform(-1, 1, (3, 3, m))
        pk = rng.uniform(-1, 1, (m, n))
        pb = rng.uniform(-1, 1, n)
        sep = conv2d_pointwise(conv2d_depthwise(x, dk, None, stride=stride), pk, pb)
        composed = dk[:, :, :, None] * pk[None, None, :, :]
        std = conv2d_standard(x, composed, pb, stride=stride)
        # the separable route stores its intermediate as float32, so giving
        # "within 1e-6" its absolute reading on these O(1) values
        assert np.allclose(sep.data, std.data, rtol=rel, atol=1e-6)
    _report("03 convolution correctness vs naive oracle", t0, 30.0,
            "200 oracle shapes + 50 separable compositions")


def test_acceptance_04_codec_round_trip():
    t0 = time.perf_counter()
    rng = np.random.default_rng(31)
    anchors = [Anchor(w, h) for w, h in ANCHOR_FIXTURE]
    S = 7
    done = 0
    while done < 1000:
        C = int(rng.integers(2, 21))
        n_boxes = int(rng.integers(1, 9))
        items = []
        for _ in range(n_boxes):
            w = float(rng.uniform(0.02, 0.9))
            h = float(rng.uniform(0.02, 0.9))
            cx = float(rng.uniform(w / 2, 1 - w / 2))
            cy = float(rng.uniform(h / 2, 1 - h / 2))
            items.append((BBox(cx, cy, w, h), int(rng.integers(C))))
        gt = GroundTruth("img", tuple(items))
        try:
            target = encode(gt, anchors, S, C)
        except Exception:
            continue  # slot collision: resample (the contract tests collisions separately)
        dets = decode(target, anchors, S, C, conf_threshold=0.0)
        top = dets[: len(items)]
        for box, class_id in items:
            nearest = min(top, key=lambda d: abs(d.box.cx - box.cx) + abs(d.box.cy - box.cy))
            assert nearest.class_id == class_id
            assert abs(nearest.box.cx - box.cx) <= 1e-6
            assert abs(nearest.box.cy - box.cy) <= 1e-6
            assert abs(nearest.box.w - box.w) <= 1e-6
            assert abs(nearest.box.h - box.h) <= 1e-6
        done += 1
    _report("04 codec round trip", t0, 10.0, "1000 ground-truth sets, error <= 1e-6")


def test_acceptance_05_nms_oracle_equivalence():
    t0 = time.perf_counter()
    rng = np.random.default_rng(47)
    for _ in range(10_000):
        n = int(rng.integers(1, 21))
        ws = rng.uniform(0.05, 0.45, n)
        hs = rng.uniform(0.05, 0.45, n)
        cxs = rng.uniform(0.25, 0.75, n)
        cys = rng.uniform(0.25, 0.75, n)
        classes = rng.integers(0, 3, n)
        confs = rng.uniform(0.01, 1.0, n)
        dets = [
            Detection(BBox(cxs[i], cys[i], ws[i], hs[i]), int(classes[i]), float(confs[i]))
            for i in range(n)
        ]
        kept = nms(dets, 0.3)
        assert kept == brute_nms(dets, 0.3)
        assert nms(kept, 0.3) == kept
    _report("05 NMS oracle equivalence + idempotence", t0, 30.0, "10,000 instances")


def test_acceptance_06_anchor_clustering():
    t0 = time.perf_counter()
    rng = np.random.default_rng(59)
    for _ in range(500):
        n = int(rng.integers(12, 26))
        shapes = rng.uniform(0.2, 6.0, (n, 2))
        curve = avg_iou_curve(
            [tuple(s) for s in shapes], k_range=range(1, 11),
            seed=int(rng.integers(1 << 30)), restarts=10,
        )
        values = [v for _, v in curve]
        assert all(b >= a - 1e-12 for a, b in zip(values, values[1:])), values
    fixture = load_cluster_fixture()
    curve = dict(avg_iou_curve(fixture, k_range=range(1, 11), seed=0, restarts=10))
    gain_45 = curve[5] - curve[4]
    gain_56 = curve[6] - curve[5]
    assert gain_45 > 2 * gain_56
    _report("06 anchor clustering: monotone curve + k=5 elbow", t0, 60.0,
            f"gain(4->5)={gain_45:.4f} > 2x gain(5->6)={gain_56:.4f}")


def test_acceptance_07_map_oracle():
    t0 = time.perf_counter()
    flags = [True, False, True, False, True]
    expected = 1.0 / 3 + (2 / 3) / 3 + (3 / 5) / 3
    got = average_precision([(None, f) for f in flags], 3)
    assert abs(got - expected) <= 1e-9
    assert abs(got - ap_integrator(flags, 3)) <= 1e-9
    for simple, num_gt, want in [
        ([True, True], 2, 1.0),
        ([False, False, False], 4, 0.0),
        ([True], 1, 1.0),
    ]:
        assert abs(average_precision([(None, f) for f in simple], num_gt) - want) <= 1e-9

    rng = np.random.default_rng(61)
    for _ in range(1000):
        n_d = int(rng.integers(1, 7))
        n_g = int(rng.integers(1, 7))
        gts = []
        for _ in range(n_g):
            w = float(rng.uniform(0.1, 0.4))
            gts.append(BBox(float(rng.uniform(0.25, 0.75)), float(rng.uniform(0.25, 0.75)), w, w))
        dets = []
        for _ in range(n_d):
            w = float(rng.uniform(0.1, 0.4))
            dets.append(Detection(
                BBox(float(rng.uniform(0.25, 0.75)), float(rng.uniform(0.25, 0.75)), w, w),
                0, float(rng.uniform(0.05, 1.0)),
            ))
        gt = GroundTruth("a", tuple((b, 0) for b in gts))
        flagged = match_detections([("a", d) for d in dets], [gt], iou_threshold=0.5)
        flags = [tp for _, tp in flagged]
        got = average_precision(flagged, n_g)
        assert abs(got - ap_integrator(flags, n_g)) <= 1e-9
    _report("07 mAP oracle: fixtures within 1e-9 + 1000 integrator checks", t0, 30.0)


def test_acceptance_08_augmentation_properties():
    t0 = time.perf_counter()
    from foodspot.augment import Sample, color_shift, gaussian_blur, gaussian_noise, horizontal_flip

    rng = np.random.default_rng(67)
    img = Tensor(rng.uniform(0, 1, (10, 14, 3)).astype(np.float32))
    for _ in range(300):
        cx = int(rng.integers(0, 2**53)) / 2**53
        cy = int(rng.integers(0, 2**53)) / 2**53
        s = Sample(img, ((BBox(cx, cy, 0.25, 0.25), 3),))
        assert horizontal_flip(horizontal_flip(s)).annotations == s.annotations
    s = Sample(img, ((BBox(0.3, 0.6, 0.2, 0.1), 2),))
    assert np.array_equal(horizontal_flip(horizontal_flip(s)).image.data, s.image.data)
    assert gaussian_blur(s, 1.0).annotations == s.annotations
    assert gaussian_noise(s, 0.05, seed=5).annotations == s.annotations
    assert color_shift(s, (0.05, -0.05, 0.1)).annotations == s.annotations

    for n in list(range(1, 61)) + [100]:
        plan = plan_augmentations(n, 0.5, seed=9)
        assert sum(1 for p in plan if p is not None) == int(np.floor(0.5 * n + 0.5))
    assert sum(1 for p in plan_augmentations(100, 0.5, seed=9) if p) == 50
    assert plan_augmentations(64, 0.5, seed=3) == plan_augmentations(64, 0.5, seed=3)
    _report("08 augmentation properties", t0, 10.0,
            "involution, box identity, half selection, determinism")


def test_acceptance_09_pipeline_performance_gate(pipeline_env, meal_image_bytes):
    t0 = time.perf_counter()
    rng = np.random.default_rng(71)
    anchors = [Anchor(w, h) for w, h in ANCHOR_FIXTURE]
    S, C = 7, 100
    raw = rng.normal(0, 1.5, S * S * len(anchors) * (5 + C))
    samples = []
    for _ in range(1000):
        s0 = time.perf_counter()
        dets = decode(raw, anchors, S, C, conf_threshold=0.4)
        nms(dets, 0.3)
        samples.append((time.perf_counter() - s0) * 1000.0)
    median_ms = sorted(samples)[len(samples) // 2]
    assert median_ms < 5.0, f"decode+NMS median {median_ms:.3f} ms"

    pipeline = Pipeline(PipelineConfig.from_file(str(pipeline_env / "config.json")))
    report = format_report(run_bench(pipeline, meal_image_bytes, iterations=3))
    for figure in ("15 ms", "75 ms", "8.1 MB", "242.2 MB"):
        assert figure in report
    _report("09 pipeline performance gate", t0, 60.0,
            f"decode+NMS median {median_ms:.3f} ms < 5 ms; reference profile printed")


def test_acceptance_10_service_parity_and_determinism(pipeline_env, meal_image_bytes, capsysbinary):
    import os

    t0 = time.perf_counter()
    img_path = os.path.join(str(pipeline_env), "meal.ppm")
    with open(img_path, "wb") as fh:
        fh.write(meal_image_bytes)
    code = cli_main(["detect", "--config", str(pipeline_env / "config.json"), "--image", img_path])
    assert code == 0
    cli_bytes = capsysbinary.readouterr().out

    pipeline = Pipeline(PipelineConfig.from_file(str(pipeline_env / "config.json")))
    app = create_app(pipeline)

    with TestClient(app) as client:
        body = client.post("/v1/detect", content=meal_image_bytes).content
    assert body == cli_bytes

    def one(_):
        with TestClient(app) as client:
            return client.post("/v1/detect", content=meal_image_bytes).content

    with ThreadPoolExecutor(max_workers=8) as pool:
        bodies = list(pool.map(one, range(8)))
    assert len(set(bodies)) == 1
    assert bodies[0] == cli_bytes
    _report("10 service parity and determinism", t0, 30.0,
            "CLI == /v1/detect byte-for-byte; 8 concurrent bodies identical")


def test_acceptance_11_nutrition_arithmetic():
    t0 = time.perf_counter()
    from foodspot.nutrition import DEFAULT_DB_PATH, NutritionDatabase, analyze

    db = NutritionDatabase.from_file(DEFAULT_DB_PATH)
    labels = ["rice", "miso soup", "grilled salmon", "mystery dish"]

    def det(cid, conf):
        return Detection(BBox(0.5, 0.5, 0.2, 0.2), cid, conf)

    meal = analyze([det(0, 0.9), det(1, 0.8), det(2, 0.7)], labels, db)
    rice, miso, salmon = (db.lookup(x) for x in labels[:3])
    assert meal.totals.calories == rice.calories + miso.calories + salmon.calories == 495.0
    assert meal.totals.sodium == rice.sodium + miso.sodium + salmon.sodium == 1232.0
    assert meal.totals.protein == rice.protein + miso.protein + salmon.protein

    single = analyze([det(0, 0.9)], labels, db)
    double = analyze([det(0, 0.9), det(0, 0.4)], labels, db)
    assert double.totals.calories == 2 * single.totals.calories
    assert double.totals.total_fat == 2 * single.totals.total_fat

    partial = analyze([det(0, 0.9), det(3, 0.8)], labels, db)
    assert partial.missing == ("mystery dish",)
    assert len(partial.items) == 1
    assert partial.totals.calories == rice.calories
    _report("11 nutrition arithmetic", t0, 5.0)
