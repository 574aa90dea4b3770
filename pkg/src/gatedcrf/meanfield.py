"""Mean-field inference for the attention-gated multi-scale fusion CRF.

One iteration updates, in order:

  gates (per intermediate scale s, against reference scale S):
      evidence_s  = channel_sum( y_s * (K_s conv y_S) )
      smoothing_s = beta_s conv a_s          # previous gates
      a_s         = sigmoid( -(evidence_s + smoothing_s) )
  reference features:
      y_S = x_S + sum_s a_s * (K_s conv y_s)
  intermediate features (off by default, matching the reduced schedule):
      y_s = x_s + a_s * (K_s conv y_S)

Features initialize to their observations and gates to 0.5 (the zero-evidence
sigmoid). Note the sign convention: strong positive feature agreement drives
the gate BELOW 0.5.

Every update function takes an ``ops`` backend: :mod:`gatedcrf.tensor_ops`
for plain arrays (the default) or :mod:`gatedcrf.autodiff` for taped
variables, so training differentiates through exactly this code.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from . import fileio, tensor_ops
from .energy import AttentionMaps, KernelBank, LatentFeatures, MultiScaleFeatures
from .tensor_ops import ShapeError

_INIT_MODES = ("features_from_observations",)


@dataclass(frozen=True)
class InferenceConfig:
    iterations: int = 3
    update_intermediate_scales: bool = False
    initialization: str = "features_from_observations"

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError(f"iterations must be >= 1, got {self.iterations}")
        if self.initialization not in _INIT_MODES:
            raise ValueError(f"unknown initialization {self.initialization!r}")

    @classmethod
    def from_file(cls, path) -> "InferenceConfig":
        kv = fileio.read_kv(path)
        known = {"iterations", "update_intermediate_scales"}
        unknown = set(kv) - known
        if unknown:
            raise ValueError(f"{path}: unknown config keys {sorted(unknown)}")
        kwargs = {}
        if "iterations" in kv:
            kwargs["iterations"] = int(kv["iterations"])
        if "update_intermediate_scales" in kv:
            kwargs["update_intermediate_scales"] = fileio.parse_bool(
                kv["update_intermediate_scales"]
            )
        return cls(**kwargs)

    def to_kv(self) -> dict:
        return {
            "iterations": self.iterations,
            "update_intermediate_scales": str(self.update_intermediate_scales).lower(),
        }


@dataclass
class InferenceState:
    Y: LatentFeatures
    A: AttentionMaps
    iteration: int = 0


def _check_state(state: InferenceState, X: MultiScaleFeatures) -> None:
    if len(state.Y.scales) != X.num_scales:
        raise ShapeError(
            f"state holds {len(state.Y.scales)} scales, observations have {X.num_scales}"
        )
    if tuple(state.Y.scales[0].shape) != X.map_shape:
        raise ShapeError(
            f"state map shape {tuple(state.Y.scales[0].shape)} != observations {X.map_shape}"
        )
    if len(state.A.maps) != X.num_scales - 1:
        raise ShapeError(
            f"state holds {len(state.A.maps)} gate maps, expected {X.num_scales - 1}"
        )


def _check_kernels(kernels: KernelBank, X: MultiScaleFeatures) -> None:
    if kernels.num_intermediate != X.num_scales - 1:
        raise ShapeError(
            f"kernel bank covers {kernels.num_intermediate} intermediate scales, "
            f"observations imply {X.num_scales - 1}"
        )
    c = X.map_shape[0]
    if tuple(kernels.K[0].shape)[0] != c:
        raise ShapeError(
            f"message kernels have {tuple(kernels.K[0].shape)[0]} channels, features have {c}"
        )


def initial_state(
    X: MultiScaleFeatures, ops=tensor_ops, fixed_attention: float | None = None
) -> InferenceState:
    """Features start at their observations, gates at 0.5 (or a forced value)."""
    _, h, w = X.map_shape
    gate0 = 0.5 if fixed_attention is None else float(fixed_attention)
    gates = [
        ops.constant(np.full((1, h, w), gate0), like=X.scales[0])
        for _ in range(X.num_scales - 1)
    ]
    return InferenceState(
        Y=LatentFeatures(list(X.scales)), A=AttentionMaps(gates), iteration=0
    )


def update_attention(
    state: InferenceState, X: MultiScaleFeatures, kernels: KernelBank, ops=tensor_ops
) -> AttentionMaps:
    """One gate update per intermediate scale; state.A supplies the priors."""
    _check_state(state, X)
    _check_kernels(kernels, X)
    y_ref = state.Y.scales[-1]
    new_maps = []
    for s in range(X.num_scales - 1):
        evidence = ops.channel_sum(
            ops.mul(state.Y.scales[s], ops.conv2d(y_ref, kernels.K[s]))
        )
        smoothing = ops.conv2d(state.A.maps[s], kernels.beta[s])
        new_maps.append(ops.sigmoid(ops.negate(ops.add(evidence, smoothing))))
    return AttentionMaps(new_maps)


def update_reference_features(
    state: InferenceState, X: MultiScaleFeatures, kernels: KernelBank, ops=tensor_ops
):
    """Gated sum of intermediate-scale messages on top of the observation."""
    _check_state(state, X)
    _check_kernels(kernels, X)
    out = X.scales[-1]
    for s in range(X.num_scales - 1):
        message = ops.conv2d(state.Y.scales[s], kernels.K[s])
        out = ops.add(out, ops.mul(message, state.A.maps[s]))
    return out


def update_intermediate_features(
    state: InferenceState,
    X: MultiScaleFeatures,
    kernels: KernelBank,
    s: int,
    ops=tensor_ops,
):
    """Gated reference-scale message on top of observation s (0-based index)."""
    _check_state(state, X)
    _check_kernels(kernels, X)
    if not 0 <= s < X.num_scales - 1:
        raise ValueError(
            f"intermediate scale index {s} out of range [0, {X.num_scales - 2}]"
        )
    message = ops.conv2d(state.Y.scales[-1], kernels.K[s])
    return ops.add(X.scales[s], ops.mul(message, state.A.maps[s]))


def step_inference(
    state: InferenceState,
    X: MultiScaleFeatures,
    kernels: KernelBank,
    cfg: InferenceConfig,
    ops=tensor_ops,
    fixed_attention: float | None = None,
) -> InferenceState:
    if fixed_attention is None:
        A = update_attention(state, X, kernels, ops=ops)
    else:
        A = state.A
    state = InferenceState(Y=state.Y, A=A, iteration=state.iteration)
    scales = list(state.Y.scales)
    scales[-1] = update_reference_features(state, X, kernels, ops=ops)
    if cfg.update_intermediate_scales:
        # Intermediate scales read the freshly updated reference map.
        mid = InferenceState(
            Y=LatentFeatures(list(scales)), A=A, iteration=state.iteration
        )
        for s in range(X.num_scales - 1):
            scales[s] = update_intermediate_features(mid, X, kernels, s, ops=ops)
    return InferenceState(
        Y=LatentFeatures(scales), A=A, iteration=state.iteration + 1
    )


def iterate_inference(
    X: MultiScaleFeatures,
    kernels: KernelBank,
    cfg: InferenceConfig,
    ops=tensor_ops,
    fixed_attention: float | None = None,
) -> Iterator[InferenceState]:
    """Yield the state after each of cfg.iterations update rounds."""
    state = initial_state(X, ops=ops, fixed_attention=fixed_attention)
    for _ in range(cfg.iterations):
        state = step_inference(state, X, kernels, cfg, ops=ops, fixed_attention=fixed_attention)
        yield state


def run_inference(
    X: MultiScaleFeatures,
    kernels: KernelBank,
    cfg: InferenceConfig | None = None,
    ops=tensor_ops,
    fixed_attention: float | None = None,
) -> InferenceState:
    """Run the full schedule and return the final state.

    ``fixed_attention`` bypasses the gate update and pins every gate to the
    given constant (1.0 = fully open, 0.0 = closed); used by ablations and
    gating tests, not part of the config file surface.
    """
    cfg = cfg or InferenceConfig()
    state = None
    for state in iterate_inference(X, kernels, cfg, ops=ops, fixed_attention=fixed_attention):
        pass
    return state
