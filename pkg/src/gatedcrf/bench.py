"""Throughput harness for the mean-field iteration.

Times the per-iteration cost of inference across grid sizes (it should be
linear in pixel count: 3x3 kernels, stride 1) and, for a relative
comparison, a separable 5-tap Gaussian-blur message-passing stand-in of the
kind heavier Gaussian-potential models rely on per iteration.
"""

from __future__ import annotations

import csv
import io
import statistics
import time
from dataclasses import dataclass

import numpy as np

from .energy import KernelBank, MultiScaleFeatures
from .meanfield import InferenceConfig, run_inference

GAUSS5 = np.array([1.0, 4.0, 6.0, 4.0, 1.0]) / 16.0


def gaussian_blur5(x: np.ndarray) -> np.ndarray:
    """Separable 5-tap blur with zero padding, per channel."""
    c, h, w = x.shape
    pad = np.zeros((c, h + 4, w), dtype=np.float64)
    pad[:, 2:-2, :] = x
    rows = sum(GAUSS5[i] * pad[:, i : i + h, :] for i in range(5))
    pad2 = np.zeros((c, h, w + 4), dtype=np.float64)
    pad2[:, :, 2:-2] = rows
    return sum(GAUSS5[i] * pad2[:, :, i : i + w] for i in range(5))


@dataclass(frozen=True)
class BenchRow:
    kind: str
    height: int
    width: int
    scales: int
    channels: int
    iterations: int
    repeats: int
    threads: int
    sec_per_iter: float


CSV_HEADER = [
    "kind",
    "height",
    "width",
    "scales",
    "channels",
    "iterations",
    "repeats",
    "threads",
    "sec_per_iter",
]


def bench_meanfield(
    sizes,
    scales: int = 3,
    channels: int = 4,
    iterations: int = 3,
    repeats: int = 3,
    threads: int = 1,
    seed: int = 0,
) -> list[BenchRow]:
    """Median-of-repeats per-iteration wall time per grid size.

    The kernels here are single-threaded regardless of ``threads``; the value
    is recorded in the output for provenance.
    """
    rows: list[BenchRow] = []
    cfg = InferenceConfig(iterations=iterations)
    for n in sizes:
        rng = np.random.default_rng(seed)
        X = MultiScaleFeatures(
            [rng.standard_normal((channels, n, n)) for _ in range(scales)]
        )
        bank = KernelBank.random(rng, scales, channels, k_scale=0.05, beta_scale=0.05)

        run_inference(X, bank, cfg)  # warm-up: caches, allocator, import paths
        times = []
        for _ in range(repeats):
            t0 = time.perf_counter()
            run_inference(X, bank, cfg)
            times.append((time.perf_counter() - t0) / iterations)
        rows.append(
            BenchRow(
                "meanfield", n, n, scales, channels, iterations, repeats, threads,
                statistics.median(times),
            )
        )

        times = []
        for _ in range(repeats):
            t0 = time.perf_counter()
            for _ in range(iterations):
                for s in range(scales - 1):
                    gaussian_blur5(X.scales[s])
            times.append((time.perf_counter() - t0) / iterations)
        rows.append(
            BenchRow(
                "gaussian5", n, n, scales, channels, iterations, repeats, threads,
                statistics.median(times),
            )
        )
    return rows


def bench_csv(rows: list[BenchRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in rows:
        writer.writerow(
            [
                r.kind, r.height, r.width, r.scales, r.channels,
                r.iterations, r.repeats, r.threads, f"{r.sec_per_iter:.6f}",
            ]
        )
    return buf.getvalue()
