"""Depth evaluation: rel, rms, log10 and the delta-threshold accuracies."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensor_ops import ShapeError

DELTA_BASE = 1.25


@dataclass(frozen=True)
class DepthMap:
    """Single-channel positive depth in meters, shape (1, H, W)."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 3 or v.shape[0] != 1:
            raise ShapeError(f"depth map must be (1, H, W), got {v.shape}")
        _check_positive(v, "depth map")
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class MetricsReport:
    rel: float
    rms: float
    log10: float
    delta1: float
    delta2: float
    delta3: float

    def as_dict(self) -> dict:
        return {
            "rel": self.rel,
            "rms": self.rms,
            "log10": self.log10,
            "delta1": self.delta1,
            "delta2": self.delta2,
            "delta3": self.delta3,
        }


def _check_positive(v: np.ndarray, name: str) -> None:
    flat = v.reshape(-1)
    bad = np.flatnonzero(~(flat > 0) | ~np.isfinite(flat))
    if bad.size:
        i = int(bad[0])
        raise ValueError(f"{name} has non-positive value {flat[i]!r} at pixel index {i}")


def _as_values(x) -> np.ndarray:
    if isinstance(x, DepthMap):
        return x.values
    return np.asarray(x, dtype=np.float64)


def compute_metrics(pred, gt) -> MetricsReport:
    """Evaluate a prediction against ground truth over all pixels.

    rel    = mean( |pred - gt| / gt )
    rms    = sqrt( mean( (pred - gt)^2 ) )
    log10  = mean( |log10 pred - log10 gt| )
    deltaK = fraction with max(pred/gt, gt/pred) < 1.25^K
    """
    p = _as_values(pred)
    g = _as_values(gt)
    if p.shape != g.shape:
        raise ShapeError(f"prediction shape {p.shape} != ground truth shape {g.shape}")
    _check_positive(p, "prediction")
    _check_positive(g, "ground truth")
    p = p.reshape(-1)
    g = g.reshape(-1)
    diff = p - g
    ratio = np.maximum(p / g, g / p)
    return MetricsReport(
        rel=float(np.mean(np.abs(diff) / g)),
        rms=float(np.sqrt(np.mean(diff**2))),
        log10=float(np.mean(np.abs(np.log10(p) - np.log10(g)))),
        delta1=float(np.mean(ratio < DELTA_BASE)),
        delta2=float(np.mean(ratio < DELTA_BASE**2)),
        delta3=float(np.mean(ratio < DELTA_BASE**3)),
    )


def metrics_over_maps(preds, gts) -> MetricsReport:
    """Pool pixels of several prediction/ground-truth pairs into one report."""
    p = np.concatenate([_as_values(x).reshape(-1) for x in preds])
    g = np.concatenate([_as_values(x).reshape(-1) for x in gts])
    if p.size != g.size:
        raise ShapeError(f"{p.size} predicted pixels vs {g.size} ground-truth pixels")
    return compute_metrics(p.reshape(1, 1, -1), g.reshape(1, 1, -1))
