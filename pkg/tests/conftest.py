import os
import sys

import hypothesis
import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))  # for oracles.py

hypothesis.settings.register_profile(
    "default", max_examples=60, deadline=None, derandomize=True
)
hypothesis.settings.register_profile("thorough", max_examples=300, deadline=None)
hypothesis.settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

DATA_DIR = os.path.join(os.path.dirname(__file__), "data")

ANCHOR_FIXTURE = [(0.55, 0.62), (1.60, 1.35), (3.10, 0.90), (1.10, 3.20), (4.40, 4.10)]
WEIGHT_SEED = 1234

# crafted single-detection constants: bright blob in grid cell (row 2, col 4)
CRAFT_ROW, CRAFT_COL, CRAFT_CLASS = 2, 4, 7


@pytest.fixture
def rng():
    return np.random.default_rng(20260809)


@pytest.fixture
def data_dir():
    return DATA_DIR


def _crafted_store(spec):
    """All-zero weights except a brightness-tracking channel and an output
    bias pattern: red intensity at each cell's center-tap pixel drives the
    objectness of anchor 0, so one bright blob yields exactly one detection."""
    from foodspot.model import BN_EPSILON, ConvLayer, DenseLayer
    from foodspot.weights import WeightStore, expected_arrays

    arrays = {
        name: np.zeros(shape, dtype=np.float32) for name, shape in expected_arrays(spec)
    }
    for idx, layer in enumerate(spec.layers):
        name = f"L{idx:02d}"
        if isinstance(layer, ConvLayer):
            k = arrays[f"{name}.kernel"]
            s = layer.spec
            if s.kind == "standard":
                k[s.kernel // 2, s.kernel // 2, 0, 0] = 1.0
            elif s.kind == "depthwise":
                k[s.kernel // 2, s.kernel // 2, 0] = 1.0
            else:
                k[0, 0] = 1.0
            if layer.use_batchnorm:
                arrays[f"{name}.gamma"][:] = 1.0
                arrays[f"{name}.variance"][:] = 1.0 - BN_EPSILON
        elif isinstance(layer, DenseLayer):
            arrays[f"{name}.kernel"][4, 0] = 30.0  # anchor 0 objectness row
            arrays[f"{name}.bias"][4] = -15.0
            arrays[f"{name}.bias"][5 + CRAFT_CLASS] = 10.0
    return WeightStore(arrays=arrays)


def crafted_image_bytes():
    """224x224 black PNG-free PPM with a red blob at the crafted cell's tap."""
    import io

    from PIL import Image

    px_y, px_x = 32 * CRAFT_ROW + 31, 32 * CRAFT_COL + 31
    img = np.zeros((224, 224, 3), dtype=np.uint8)
    img[px_y - 2 : px_y + 3, px_x - 2 : px_x + 3, 0] = 255
    buf = io.BytesIO()
    Image.fromarray(img, "RGB").save(buf, format="PPM")
    return buf.getvalue()


@pytest.fixture(scope="session")
def pipeline_env(tmp_path_factory):
    """Config directory with seeded demo weights, crafted weights, anchors,
    labels, and config files for the full-size model."""
    from foodspot.model import build_mobilenet_yolo
    from foodspot.nutrition import DEFAULT_DB_PATH, DEFAULT_LABELS_PATH
    from foodspot.weights import generate_weights, save_weights_files

    root = tmp_path_factory.mktemp("pipeline")
    anchors_path = root / "anchors.txt"
    anchors_path.write_text(
        "".join(f"{w} {h}\n" for w, h in ANCHOR_FIXTURE), encoding="utf-8"
    )
    labels_path = root / "labels.txt"
    with open(DEFAULT_LABELS_PATH, encoding="utf-8") as fh:
        labels_path.write_text(fh.read(), encoding="utf-8")

    spec = build_mobilenet_yolo(num_classes=100, num_anchors=len(ANCHOR_FIXTURE))
    save_weights_files(generate_weights(spec, WEIGHT_SEED), spec, str(root / "demo.weights.json"))
    save_weights_files(_crafted_store(spec), spec, str(root / "crafted.weights.json"))

    import json

    base = {
        "anchors": "anchors.txt",
        "labels": "labels.txt",
        "nutrition_db": DEFAULT_DB_PATH,
    }
    (root / "config.json").write_text(
        json.dumps({**base, "weights": "demo.weights.json"}), encoding="utf-8"
    )
    (root / "crafted.json").write_text(
        json.dumps({**base, "weights": "crafted.weights.json"}), encoding="utf-8"
    )
    return root


@pytest.fixture(scope="session")
def meal_image_bytes():
    with open(os.path.join(DATA_DIR, "meal.ppm"), "rb") as fh:
        return fh.read()
