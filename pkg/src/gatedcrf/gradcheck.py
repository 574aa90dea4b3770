"""Central-difference gradient oracle and the standard gradient checks.

``finite_difference`` is the validation oracle: it never touches the tape,
only the forward computation, so it is an independent reference for
``Tape.backward``. The two check harnesses below cover the CRF block alone
(leaves: feature maps, message kernels, smoothing kernels) and the full toy
model (leaves: encoder, CRF and decoder weights).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff, meanfield
from .energy import KernelBank, MultiScaleFeatures
from .model import ToyConfig, ToyModel
from .synthetic import SceneSpec, generate_dataset
from .train import square_loss

DEFAULT_H = 1e-5
DEFAULT_THRESHOLD = 1e-4
REL_FLOOR = 1e-8


def finite_difference(loss_fn, params, h: float = DEFAULT_H) -> list[np.ndarray]:
    """Central differences (f(p + h e_k) - f(p - h e_k)) / 2h per coordinate.

    ``loss_fn`` maps the list of parameter arrays to a scalar; the list is
    perturbed in place one coordinate at a time and restored afterwards.
    """
    if h <= 0:
        raise ValueError(f"step h must be > 0, got {h}")
    params = [np.array(p, dtype=np.float64) for p in params]
    grads = []
    for p in params:
        g = np.zeros_like(p)
        flat, gflat = p.reshape(-1), g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            f_plus = float(loss_fn(params))
            flat[i] = orig - h
            f_minus = float(loss_fn(params))
            flat[i] = orig
            gflat[i] = (f_plus - f_minus) / (2.0 * h)
        grads.append(g)
    return grads


def max_relative_error(analytic, numeric, floor: float = REL_FLOOR) -> float:
    """Elementwise |a - n| / max(|a|, |n|), reduced with max.

    Differences at or below the absolute floor count as zero: they are
    central-difference noise on (near-)zero gradients, not disagreement.
    """
    a = np.asarray(analytic, dtype=np.float64)
    n = np.asarray(numeric, dtype=np.float64)
    if a.size == 0:
        return 0.0
    diff = np.abs(a - n)
    denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
    return float(np.max(np.where(diff <= floor, 0.0, diff / denom)))


@dataclass(frozen=True)
class LeafCheck:
    name: str
    max_rel_error: float


def crf_instance(
    seed: int = 0,
    scales: int = 2,
    channels: int = 2,
    height: int = 4,
    width: int = 4,
    iterations: int = 2,
):
    rng = np.random.default_rng(seed)
    X = [rng.standard_normal((channels, height, width)) for _ in range(scales)]
    bank = KernelBank.random(rng, scales, channels, k_scale=0.3, beta_scale=0.3)
    return X, bank, meanfield.InferenceConfig(iterations=iterations)


def _crf_loss(X_list, K_list, beta_list, cfg) -> float:
    state = meanfield.run_inference(
        MultiScaleFeatures(list(X_list)), KernelBank(list(K_list), list(beta_list)), cfg
    )
    y = state.Y.reference
    return float(np.sum(y * y))


def check_crf_gradients(
    seed: int = 0,
    scales: int = 2,
    channels: int = 2,
    height: int = 4,
    width: int = 4,
    iterations: int = 2,
    h: float = DEFAULT_H,
) -> list[LeafCheck]:
    """Analytic vs central-difference gradients of sum(y_S^2) through the
    unrolled inference, for every feature map and kernel leaf."""
    X, bank, cfg = crf_instance(seed, scales, channels, height, width, iterations)

    tape = autodiff.Tape()
    Xv = [tape.var(x, name=f"X_{i + 1}") for i, x in enumerate(X)]
    Kv = [tape.var(k, name=f"K_{i + 1}") for i, k in enumerate(bank.K)]
    Bv = [tape.var(b, name=f"beta_{i + 1}") for i, b in enumerate(bank.beta)]
    state = meanfield.run_inference(
        MultiScaleFeatures(Xv), KernelBank(Kv, Bv), cfg, ops=autodiff
    )
    y = state.Y.reference
    tape.backward(autodiff.sum_all(autodiff.mul(y, y)))

    n_s, n_k = len(X), len(bank.K)

    def loss_fn(params):
        return _crf_loss(params[:n_s], params[n_s : n_s + n_k], params[n_s + n_k :], cfg)

    fd = finite_difference(loss_fn, X + bank.K + bank.beta, h=h)
    leaves = Xv + Kv + Bv
    return [
        LeafCheck(v.tape.nodes[v.index].name, max_relative_error(v.grad, fd_g))
        for v, fd_g in zip(leaves, fd)
    ]


def check_model_gradients(
    seed: int = 0,
    scales: int = 2,
    channels: int = 2,
    scene_hw: tuple[int, int] = (8, 8),
    iterations: int = 2,
    h: float = DEFAULT_H,
) -> list[LeafCheck]:
    """Analytic vs central-difference gradients of the square loss through
    encoder, unrolled CRF and decoder, for every trainable weight."""
    spec = SceneSpec(height=scene_hw[0], width=scene_hw[1])
    scene = generate_dataset(seed, 1, spec)[0]
    cfg = ToyConfig(scales=scales, channels=channels, iterations=iterations)
    model = ToyModel.initialize(cfg, np.random.default_rng(seed + 1))
    names = model.used_param_names()

    tape = autodiff.Tape()
    leaves = {k: tape.var(model.params[k], name=k) for k in model.params}
    pred = model.forward(leaves, tape.constant(scene.rgb), ops=autodiff)
    diff = autodiff.sub(pred, tape.constant(scene.depth.values))
    tape.backward(autodiff.sum_all(autodiff.mul(diff, diff)))

    def loss_fn(params):
        trial = dict(model.params)
        trial.update(zip(names, params))
        return square_loss(model.forward(trial, scene.rgb), scene.depth.values)

    fd = finite_difference(loss_fn, [model.params[k] for k in names], h=h)
    return [
        LeafCheck(name, max_relative_error(leaves[name].grad, fd_g))
        for name, fd_g in zip(names, fd)
    ]
