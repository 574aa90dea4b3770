"""Deterministic SGD with momentum and weight decay over the taped model.

The per-image loss is the plain sum of squared depth errors; a batch loss is
the mean over its images so the learning rate does not depend on batch size.
Everything is seeded and single-threaded: two runs with the same seed produce
bit-identical parameters and loss curves.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff
from .metrics import DepthMap, MetricsReport, metrics_over_maps
from .model import ToyModel
from .synthetic import SyntheticScene
from .tensor_ops import ShapeError


class DivergenceError(RuntimeError):
    """Training produced a non-finite loss."""


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 30
    lr: float = 7e-5
    momentum: float = 0.9
    weight_decay: float = 1e-4
    batch_size: int = 4
    shuffle_seed: int = 0

    def __post_init__(self):
        if self.lr < 0:
            raise ValueError(f"lr must be >= 0, got {self.lr}")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")


def square_loss(pred, gt) -> float:
    """Sum of squared differences over all pixels of one depth map."""
    p = pred.values if isinstance(pred, DepthMap) else np.asarray(pred, dtype=np.float64)
    g = gt.values if isinstance(gt, DepthMap) else np.asarray(gt, dtype=np.float64)
    if p.shape != g.shape:
        raise ShapeError(f"prediction shape {p.shape} != ground truth shape {g.shape}")
    return float(np.sum((p - g) ** 2))


def _batch_loss(model: ToyModel, tape: autodiff.Tape, leaves, batch) -> autodiff.Var:
    total = None
    for scene in batch:
        pred = model.forward(leaves, tape.constant(scene.rgb), ops=autodiff)
        diff = autodiff.sub(pred, tape.constant(scene.depth.values))
        term = autodiff.sum_all(autodiff.mul(diff, diff))
        total = term if total is None else autodiff.add(total, term)
    return autodiff.scale(total, 1.0 / len(batch))


def train(model: ToyModel, scenes: list[SyntheticScene], cfg: TrainConfig) -> list[float]:
    """SGD in place on ``model.params``; returns the per-epoch mean loss."""
    if not scenes:
        raise ValueError("need at least one training scene")
    trainable = model.trainable_param_names()
    velocity = {k: np.zeros_like(model.params[k]) for k in trainable}
    order_rng = np.random.default_rng(cfg.shuffle_seed)
    curve: list[float] = []
    for epoch in range(cfg.epochs):
        perm = order_rng.permutation(len(scenes))
        epoch_loss = 0.0
        for start in range(0, len(scenes), cfg.batch_size):
            batch = [scenes[i] for i in perm[start : start + cfg.batch_size]]
            tape = autodiff.Tape()
            leaves = {k: tape.var(v, name=k) for k, v in model.params.items()}
            loss = _batch_loss(model, tape, leaves, batch)
            loss_value = float(loss.value)
            if not np.isfinite(loss_value):
                raise DivergenceError(
                    f"non-finite loss {loss_value} at epoch {epoch}, batch start {start}"
                )
            tape.backward(loss)
            for k in trainable:
                g = leaves[k].grad + cfg.weight_decay * model.params[k]
                velocity[k] = cfg.momentum * velocity[k] + g
                model.params[k] = model.params[k] - cfg.lr * velocity[k]
            epoch_loss += loss_value * len(batch)
        curve.append(epoch_loss / len(scenes))
    return curve


def evaluate(model: ToyModel, scenes: list[SyntheticScene]) -> MetricsReport:
    preds = [model.predict(s.rgb) for s in scenes]
    return metrics_over_maps(preds, [s.depth for s in scenes])
