"""Food detection and nutrition analysis at desk scale.

A small dense-tensor inference engine with verifiable cost formulas, a
grid-based box codec with IoU k-means anchors and greedy NMS, an mAP
evaluator, seeded data augmentation, a one-serving nutrition layer, and a
CLI + HTTP service wrapping the whole pipeline.
"""

from .anchors import DegenerateClusterError, avg_iou_curve, kmeans_anchors
from .augment import (
    Sample,
    augment_set,
    color_shift,
    gaussian_blur,
    gaussian_noise,
    horizontal_flip,
)
from .boxes import Anchor, BBox, Detection, GroundTruth, iou, nms, shape_iou
from .codec import SlotCollisionError, decode, encode
from .evaluate import EvalReport, average_precision, match_detections, mean_average_precision
from .model import (
    ConvLayer,
    DenseLayer,
    ModelSpec,
    YoloOutputLayer,
    build_mobilenet_yolo,
    count_parameters,
    forward,
    parameter_breakdown,
)
from .nutrition import (
    MealAnalysis,
    NutritionDatabase,
    NutritionFacts,
    NutritionService,
    RemoteNutritionClient,
    UnknownFoodError,
    analyze,
)
from .pipeline import DetectResponse, Pipeline, PipelineConfig
from .tensor import (
    ConvSpec,
    Tensor,
    batchnorm,
    conv2d_depthwise,
    conv2d_pointwise,
    conv2d_standard,
    flop_count,
    fully_connected,
    param_count,
    relu,
)
from .weights import (
    WeightStore,
    generate_weights,
    load_weights,
    load_weights_files,
    save_weights,
    save_weights_files,
)

__version__ = "0.1.0"
