"""CRF domain containers and exact evaluation of the three energy terms.

The model couples S feature scales at a shared (C, H, W) resolution. The
last scale is the reference scale; each of the S-1 intermediate scales has a
per-pixel gate map and a pair of learnable 3x3 kernels: a C x C message
kernel and a 1 x 1-channel gate-smoothing kernel. The energy is

    unary                -1/2 sum_s sum_i ||y_s^i - x_s^i||^2
    pairwise             sum_{s<S} sum_i a_s^i * <y_s^i, (K_s * y_S)^i>
    attention smoothing  sum_{s<S} sum_i a_s^i * (beta_s * a_s)^i

where ``*`` is the padded 3x3 cross-correlation, i.e. pixel pairs interact
exactly over the convolutional footprint.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor_ops
from .tensor_ops import ShapeError


def _shape(x) -> tuple:
    return tuple(x.shape)


def _check_maps(maps, count_name: str, min_count: int = 1) -> None:
    if len(maps) < min_count:
        raise ShapeError(f"{count_name}: need at least {min_count} maps, got {len(maps)}")
    ref = _shape(maps[0])
    if len(ref) != 3:
        raise ShapeError(f"{count_name}: maps must be (C, H, W), got {ref}")
    for i, m in enumerate(maps):
        if _shape(m) != ref:
            raise ShapeError(f"{count_name}[{i}]: shape {_shape(m)} != {ref}")


@dataclass
class MultiScaleFeatures:
    """Observed feature maps X_1..X_S; the last entry is the reference scale."""

    scales: list

    def __post_init__(self):
        _check_maps(self.scales, "MultiScaleFeatures.scales", min_count=2)

    @property
    def num_scales(self) -> int:
        return len(self.scales)

    @property
    def map_shape(self) -> tuple:
        return _shape(self.scales[0])

    @property
    def reference(self):
        return self.scales[-1]


@dataclass
class LatentFeatures:
    """Mean-field feature expectations, one map per scale."""

    scales: list

    def __post_init__(self):
        _check_maps(self.scales, "LatentFeatures.scales", min_count=2)

    @property
    def reference(self):
        return self.scales[-1]


@dataclass
class AttentionMaps:
    """Per-pixel gate expectations for each intermediate scale, (1, H, W) each."""

    maps: list

    def __post_init__(self):
        _check_maps(self.maps, "AttentionMaps.maps", min_count=1)
        if _shape(self.maps[0])[0] != 1:
            raise ShapeError(
                f"attention maps must be single-channel, got {_shape(self.maps[0])}"
            )


@dataclass
class KernelBank:
    """Learnable CRF kernels: one (C, C, 3, 3) message kernel and one
    (1, 1, 3, 3) gate-smoothing kernel per intermediate scale."""

    K: list
    beta: list

    def __post_init__(self):
        if len(self.K) != len(self.beta):
            raise ShapeError(
                f"KernelBank: {len(self.K)} message kernels vs {len(self.beta)} smoothing kernels"
            )
        if not self.K:
            raise ShapeError("KernelBank: need at least one intermediate scale")
        for i, k in enumerate(self.K):
            s = _shape(k)
            if len(s) != 4 or s[2:] != (3, 3) or s[0] != s[1]:
                raise ShapeError(f"K[{i}]: expected (C, C, 3, 3), got {s}")
        for i, b in enumerate(self.beta):
            if _shape(b) != (1, 1, 3, 3):
                raise ShapeError(f"beta[{i}]: expected (1, 1, 3, 3), got {_shape(b)}")

    @property
    def num_intermediate(self) -> int:
        return len(self.K)

    @classmethod
    def zeros(cls, num_scales: int, channels: int) -> "KernelBank":
        n = num_scales - 1
        return cls(
            K=[np.zeros((channels, channels, 3, 3)) for _ in range(n)],
            beta=[np.zeros((1, 1, 3, 3)) for _ in range(n)],
        )

    @classmethod
    def random(
        cls,
        rng: np.random.Generator,
        num_scales: int,
        channels: int,
        k_scale: float = 0.3,
        beta_scale: float = 0.3,
    ) -> "KernelBank":
        n = num_scales - 1
        return cls(
            K=[k_scale * rng.standard_normal((channels, channels, 3, 3)) for _ in range(n)],
            beta=[beta_scale * rng.standard_normal((1, 1, 3, 3)) for _ in range(n)],
        )


@dataclass(frozen=True)
class EnergyBreakdown:
    unary: float
    pairwise: float
    attention_smoothing: float
    total: float


def _check_against(Y: LatentFeatures, X: MultiScaleFeatures) -> None:
    if len(Y.scales) != len(X.scales) or _shape(Y.scales[0]) != X.map_shape:
        raise ShapeError(
            f"latent features ({len(Y.scales)} x {_shape(Y.scales[0])}) do not match "
            f"observations ({len(X.scales)} x {X.map_shape})"
        )


def unary_energy(Y: LatentFeatures, X: MultiScaleFeatures) -> float:
    """Negative half squared distance between latent and observed features."""
    _check_against(Y, X)
    total = 0.0
    for y, x in zip(Y.scales, X.scales):
        total += float(np.sum((np.asarray(y) - np.asarray(x)) ** 2))
    return -0.5 * total + 0.0  # normalizes -0.0 at zero residual


def pairwise_energy(Y: LatentFeatures, A: AttentionMaps, kernels: KernelBank) -> float:
    """Gated bilinear coupling of each intermediate scale with the reference.

    The gate may hold mean-field expectations in (0,1) or exact binary values
    (brute-force checks use the latter).
    """
    if len(A.maps) != len(Y.scales) - 1:
        raise ShapeError(
            f"expected {len(Y.scales) - 1} attention maps, got {len(A.maps)}"
        )
    if kernels.num_intermediate != len(A.maps):
        raise ShapeError(
            f"kernel bank covers {kernels.num_intermediate} scales, attention has {len(A.maps)}"
        )
    y_ref = np.asarray(Y.reference)
    total = 0.0
    for y_s, a_s, k_s in zip(Y.scales[:-1], A.maps, kernels.K):
        msg = tensor_ops.conv2d(y_ref, k_s)
        coupling = tensor_ops.channel_sum(tensor_ops.mul(np.asarray(y_s), msg))
        total += float(np.sum(np.asarray(a_s) * coupling))
    return total


def attention_smoothing_energy(A: AttentionMaps, kernels: KernelBank) -> float:
    """Within-scale bilinear form of each gate map with its smoothing kernel."""
    if kernels.num_intermediate != len(A.maps):
        raise ShapeError(
            f"kernel bank covers {kernels.num_intermediate} scales, attention has {len(A.maps)}"
        )
    total = 0.0
    for a_s, b_s in zip(A.maps, kernels.beta):
        total += float(np.sum(np.asarray(a_s) * tensor_ops.conv2d(np.asarray(a_s), b_s)))
    return total


def total_energy(
    Y: LatentFeatures, A: AttentionMaps, X: MultiScaleFeatures, kernels: KernelBank
) -> EnergyBreakdown:
    u = unary_energy(Y, X)
    p = pairwise_energy(Y, A, kernels)
    m = attention_smoothing_energy(A, kernels)
    return EnergyBreakdown(unary=u, pairwise=p, attention_smoothing=m, total=u + p + m)
