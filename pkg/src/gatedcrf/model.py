"""Toy encoder/decoder around the CRF fusion block.

The encoder is a small sigmoid-conv stack standing in for a deep backbone:
it pools the rgb input once (features live at half the scene resolution) and
emits one feature map per scale from successive depths, all at the common
resolution the fusion block expects. The decoder mirrors the full-scale
design: a learnable 2x transposed-convolution upsample that halves the
channel count, then a projection to one channel squashed into (0, depth_scale)
so predictions are strictly positive.

``forward`` is generic over the ops backend: pass plain arrays with
:mod:`gatedcrf.tensor_ops` or tape variables with :mod:`gatedcrf.autodiff`.

Fusion variants (the ablation axes):
  structured    gates inferred, smoothing kernels active
  unstructured  gates inferred, smoothing kernels pinned to zero
  open_gate     gates pinned to 1 (no attention)
  concat        channel concatenation + one conv, no CRF
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import autodiff, fileio, meanfield, tensor_ops
from .energy import KernelBank, MultiScaleFeatures

FUSION_MODES = ("structured", "unstructured", "open_gate", "concat")


@dataclass(frozen=True)
class ToyConfig:
    scales: int = 3
    channels: int = 8
    iterations: int = 3
    depth_scale: float = 10.0
    fusion: str = "structured"

    def __post_init__(self):
        if self.scales < 2:
            raise ValueError(f"need at least 2 scales, got {self.scales}")
        if self.fusion not in FUSION_MODES:
            raise ValueError(f"unknown fusion mode {self.fusion!r}")

    @property
    def half_channels(self) -> int:
        return max(1, self.channels // 2)


class ToyModel:
    def __init__(self, cfg: ToyConfig, params: dict[str, np.ndarray]):
        self.cfg = cfg
        self.params = params

    @classmethod
    def initialize(cls, cfg: ToyConfig, rng: np.random.Generator) -> "ToyModel":
        c, s = cfg.channels, cfg.scales

        def conv_init(c_out, c_in, kh=3, kw=3):
            return rng.standard_normal((c_out, c_in, kh, kw)) / np.sqrt(c_in * kh * kw)

        # Every variant draws the same parameter set in the same order, so
        # a shared seed gives identical shared weights across variants.
        params: dict[str, np.ndarray] = {"enc_in": conv_init(c, 3)}
        for i in range(1, s + 1):
            params[f"enc_{i}"] = conv_init(c, c)
        for i in range(1, s):
            params[f"crf_K_{i}"] = 0.3 * conv_init(c, c)
            params[f"crf_beta_{i}"] = 0.3 * conv_init(1, 1)
        params["fuse"] = conv_init(c, s * c)
        params["dec_up"] = rng.standard_normal((c, cfg.half_channels, 2, 2)) / np.sqrt(c * 4)
        params["dec_out"] = conv_init(1, cfg.half_channels)
        if cfg.fusion == "unstructured":
            for i in range(1, s):
                params[f"crf_beta_{i}"] = np.zeros((1, 1, 3, 3))
        return cls(cfg, params)

    def used_param_names(self) -> list[str]:
        cfg = self.cfg
        names = ["enc_in"] + [f"enc_{i}" for i in range(1, cfg.scales + 1)]
        if cfg.fusion == "concat":
            names.append("fuse")
        else:
            names += [f"crf_K_{i}" for i in range(1, cfg.scales)]
            if cfg.fusion == "structured":
                names += [f"crf_beta_{i}" for i in range(1, cfg.scales)]
        return names + ["dec_up", "dec_out"]

    def trainable_param_names(self) -> list[str]:
        return self.used_param_names()

    def encode(self, params: dict, rgb, ops=tensor_ops) -> list:
        feats = []
        f = ops.avgpool2x(ops.sigmoid(ops.conv2d(rgb, params["enc_in"])))
        for i in range(1, self.cfg.scales + 1):
            f = ops.sigmoid(ops.conv2d(f, params[f"enc_{i}"]))
            feats.append(f)
        return feats

    def fuse(self, params: dict, feats: list, ops=tensor_ops):
        cfg = self.cfg
        if cfg.fusion == "concat":
            return ops.conv2d(ops.concat_channels(feats), params["fuse"])
        bank = KernelBank(
            K=[params[f"crf_K_{i}"] for i in range(1, cfg.scales)],
            beta=[params[f"crf_beta_{i}"] for i in range(1, cfg.scales)],
        )
        state = meanfield.run_inference(
            MultiScaleFeatures(feats),
            bank,
            meanfield.InferenceConfig(iterations=cfg.iterations),
            ops=ops,
            fixed_attention=1.0 if cfg.fusion == "open_gate" else None,
        )
        return state.Y.reference

    def decode(self, params: dict, fused, ops=tensor_ops):
        up = ops.deconv2x(fused, params["dec_up"])
        z = ops.conv2d(up, params["dec_out"])
        # the micrometer floor keeps predictions strictly positive (as the
        # metrics require) even when the sigmoid underflows to exactly 0
        floor = ops.constant(np.full(tuple(z.shape), 1e-6), like=z)
        return ops.add(ops.scale(ops.sigmoid(z), self.cfg.depth_scale), floor)

    def forward(self, params: dict, rgb, ops=tensor_ops):
        return self.decode(params, self.fuse(params, self.encode(params, rgb, ops), ops), ops)

    def predict(self, rgb: np.ndarray) -> np.ndarray:
        return self.forward(self.params, np.asarray(rgb, dtype=np.float64))

    def taped_forward(self, tape: autodiff.Tape, rgb: np.ndarray):
        """Lift parameters onto a tape and run the differentiable forward."""
        leaves = {k: tape.var(v, name=k) for k, v in self.params.items()}
        pred = self.forward(leaves, tape.constant(rgb), ops=autodiff)
        return pred, leaves

    def save(self, out_dir) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        manifest = {
            "scales": self.cfg.scales,
            "channels": self.cfg.channels,
            "iterations": self.cfg.iterations,
            "depth_scale": self.cfg.depth_scale,
            "fusion": self.cfg.fusion,
            "params": ",".join(self.params),
        }
        for name, value in self.params.items():
            fileio.write_tensor(out / f"{name}.ten", value)
            manifest[f"shape_{name}"] = "x".join(str(d) for d in value.shape)
        fileio.write_kv(out / "manifest.txt", manifest)

    @classmethod
    def load(cls, in_dir) -> "ToyModel":
        src = Path(in_dir)
        kv = fileio.read_kv(src / "manifest.txt")
        cfg = ToyConfig(
            scales=int(kv["scales"]),
            channels=int(kv["channels"]),
            iterations=int(kv["iterations"]),
            depth_scale=float(kv["depth_scale"]),
            fusion=kv["fusion"],
        )
        params = {
            name: fileio.read_tensor(src / f"{name}.ten")
            for name in kv["params"].split(",")
        }
        return cls(cfg, params)

    def with_fusion(self, fusion: str) -> "ToyModel":
        """Same weights, different fusion wiring (ablation helper)."""
        return ToyModel(replace(self.cfg, fusion=fusion), dict(self.params))
