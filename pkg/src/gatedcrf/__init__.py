"""Attention-gated multi-scale CRF feature fusion.

A fully differentiable numerical block: exact energy evaluation,
convolutional mean-field inference with per-pixel structured gates, a
reverse-mode tape validated against central finite differences, and a
synthetic monocular depth pipeline with the standard evaluation metrics.
"""

from .autodiff import GradientSet, Tape, Var, collect_gradients
from .energy import (
    AttentionMaps,
    EnergyBreakdown,
    KernelBank,
    LatentFeatures,
    MultiScaleFeatures,
    attention_smoothing_energy,
    pairwise_energy,
    total_energy,
    unary_energy,
)
from .gradcheck import finite_difference, max_relative_error
from .meanfield import (
    InferenceConfig,
    InferenceState,
    initial_state,
    iterate_inference,
    run_inference,
    update_attention,
    update_intermediate_features,
    update_reference_features,
)
from .metrics import DepthMap, MetricsReport, compute_metrics, metrics_over_maps
from .model import FUSION_MODES, ToyConfig, ToyModel
from .synthetic import SceneSpec, SyntheticScene, generate_dataset, generate_scene
from .tensor_ops import ShapeError
from .train import DivergenceError, TrainConfig, evaluate, square_loss, train

__version__ = "0.1.0"

__all__ = [
    "AttentionMaps",
    "DepthMap",
    "DivergenceError",
    "EnergyBreakdown",
    "FUSION_MODES",
    "GradientSet",
    "InferenceConfig",
    "InferenceState",
    "KernelBank",
    "LatentFeatures",
    "MetricsReport",
    "MultiScaleFeatures",
    "SceneSpec",
    "ShapeError",
    "SyntheticScene",
    "Tape",
    "ToyConfig",
    "ToyModel",
    "TrainConfig",
    "Var",
    "attention_smoothing_energy",
    "collect_gradients",
    "compute_metrics",
    "evaluate",
    "finite_difference",
    "generate_dataset",
    "generate_scene",
    "initial_state",
    "iterate_inference",
    "max_relative_error",
    "metrics_over_maps",
    "pairwise_energy",
    "run_inference",
    "square_loss",
    "total_energy",
    "train",
    "unary_energy",
    "update_attention",
    "update_intermediate_features",
    "update_reference_features",
]
