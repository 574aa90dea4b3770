"""Dense float64 map kernels: 3x3 convolution, resampling, elementwise ops.

Maps are channel-major ``(C, H, W)`` float64 arrays. Every function is pure
and single-threaded with a fixed summation order per output element, so two
runs on identical inputs are bit-identical. Kernels avoid BLAS-backed paths
(plain ``einsum`` / elementwise numpy) to keep that guarantee independent of
thread configuration.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


class ShapeError(ValueError):
    """An operand's shape violates the operation's contract."""


def _as_map(x, name: str = "input") -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 3:
        raise ShapeError(f"{name} must be a (C, H, W) map, got shape {x.shape}")
    return x


def _im2col(x: np.ndarray) -> np.ndarray:
    """Zero-pad by 1 and unfold 3x3 windows into (C*9, H*W) columns."""
    c, h, w = x.shape
    pad = np.zeros((c, h + 2, w + 2), dtype=np.float64)
    pad[:, 1:-1, 1:-1] = x
    win = sliding_window_view(pad, (3, 3), axis=(1, 2))  # (C, H, W, 3, 3)
    return np.ascontiguousarray(win.transpose(0, 3, 4, 1, 2)).reshape(c * 9, h * w)


# unfolded row-block budget: keeps the im2col working set cache-resident on
# large maps; blocking does not change the per-element summation order
_BLOCK_PIXELS = 4096


def conv2d(x, k) -> np.ndarray:
    """Cross-correlate a (C_in, H, W) map with a (C_out, C_in, 3, 3) kernel.

    Stride 1, zero padding 1, no kernel flip (deep-learning convention);
    the output is (C_out, H, W).
    """
    x = _as_map(x)
    k = np.asarray(k, dtype=np.float64)
    if k.ndim != 4 or k.shape[2:] != (3, 3):
        raise ShapeError(f"kernel must be (C_out, C_in, 3, 3), got shape {k.shape}")
    if k.shape[1] != x.shape[0]:
        raise ShapeError(
            f"kernel expects {k.shape[1]} input channels, map has {x.shape[0]}"
        )
    c, h, w = x.shape
    c_out = k.shape[0]
    kmat = np.ascontiguousarray(k.reshape(c_out, c * 9))
    pad = np.zeros((c, h + 2, w + 2), dtype=np.float64)
    pad[:, 1:-1, 1:-1] = x
    out = np.empty((c_out, h, w), dtype=np.float64)
    rows_per = max(1, _BLOCK_PIXELS // w)
    cols = np.empty((c, 9, rows_per * w), dtype=np.float64)
    for r0 in range(0, h, rows_per):
        r1 = min(r0 + rows_per, h)
        rows = r1 - r0
        cb = cols[:, :, : rows * w]
        for u in range(3):
            for v in range(3):
                cb[:, u * 3 + v, :] = pad[:, r0 + u : r1 + u, v : v + w].reshape(
                    c, rows * w
                )
        out[:, r0:r1, :] = np.einsum(
            "oj,jp->op", kmat, cb.reshape(c * 9, rows * w)
        ).reshape(c_out, rows, w)
    return out


def _lerp_axis(n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    # Maps 2n output samples onto n inputs with endpoints pinned to endpoints
    # (corner-aligned); n == 1 degenerates to replication.
    if n == 1:
        z = np.zeros(2, dtype=np.intp)
        return z, z, np.zeros(2, dtype=np.float64)
    src = np.arange(2 * n, dtype=np.float64) * (n - 1) / (2 * n - 1)
    i0 = np.floor(src).astype(np.intp)
    t = src - i0
    i1 = np.minimum(i0 + 1, n - 1)
    return i0, i1, t


def upsample2x(x) -> np.ndarray:
    """Bilinear 2x upsampling, (C, H, W) -> (C, 2H, 2W).

    Corner-aligned interpolation, computed as ``a + t*(b - a)`` so a constant
    map is reproduced exactly at double resolution.
    """
    x = _as_map(x)
    _, h, w = x.shape
    i0, i1, t = _lerp_axis(h)
    rows = x[:, i0, :] + t[None, :, None] * (x[:, i1, :] - x[:, i0, :])
    j0, j1, u = _lerp_axis(w)
    return rows[:, :, j0] + u[None, None, :] * (rows[:, :, j1] - rows[:, :, j0])


def deconv2x(x, k) -> np.ndarray:
    """Learnable transposed-convolution 2x upsampling.

    The kernel is (C_in, C_out, 2, 2) applied with stride 2: every input
    pixel paints one 2x2 output block, (C_in, H, W) -> (C_out, 2H, 2W).
    """
    x = _as_map(x)
    k = np.asarray(k, dtype=np.float64)
    if k.ndim != 4 or k.shape[2:] != (2, 2):
        raise ShapeError(f"kernel must be (C_in, C_out, 2, 2), got shape {k.shape}")
    if k.shape[0] != x.shape[0]:
        raise ShapeError(
            f"kernel expects {k.shape[0]} input channels, map has {x.shape[0]}"
        )
    _, h, w = x.shape
    c_out = k.shape[1]
    blocks = np.einsum("ihw,iouv->ohuwv", x, k)
    return blocks.reshape(c_out, 2 * h, 2 * w)


def avgpool2x(x) -> np.ndarray:
    """2x2 mean pooling, (C, 2H, 2W) -> (C, H, W); spatial dims must be even."""
    x = _as_map(x)
    c, h, w = x.shape
    if h % 2 or w % 2:
        raise ShapeError(f"avgpool2x needs even spatial dims, got {h}x{w}")
    return x.reshape(c, h // 2, 2, w // 2, 2).mean(axis=(2, 4))


def _check_binary(a: np.ndarray, b: np.ndarray, op: str) -> None:
    if a.shape == b.shape:
        return
    # The one sanctioned broadcast: a single-channel map applied across the
    # channels of a (C, H, W) map (attention gates against feature maps).
    if a.ndim == 3 and b.shape == (1,) + a.shape[1:]:
        return
    raise ShapeError(f"{op}: shapes {a.shape} and {b.shape} are not compatible")


def add(a, b) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    _check_binary(a, b, "add")
    return a + b


def sub(a, b) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    _check_binary(a, b, "sub")
    return a - b


def mul(a, b) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    _check_binary(a, b, "mul")
    return a * b


def negate(x) -> np.ndarray:
    return -np.asarray(x, dtype=np.float64)


def scale(x, c: float) -> np.ndarray:
    return np.asarray(x, dtype=np.float64) * float(c)


def sigmoid(x) -> np.ndarray:
    """Numerically stable logistic 1/(1+exp(-x)).

    Exact float64 saturates to 0.0/1.0 beyond |x| ~ 37; the strict-(0,1)
    range holds for the moderate activations produced by the inference
    updates.
    """
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def channel_sum(x) -> np.ndarray:
    """Sum a (C, H, W) map over channels into a (1, H, W) map."""
    return _as_map(x).sum(axis=0, keepdims=True)


def concat_channels(xs) -> np.ndarray:
    maps = [_as_map(x, f"input[{i}]") for i, x in enumerate(xs)]
    hw = maps[0].shape[1:]
    for i, m in enumerate(maps):
        if m.shape[1:] != hw:
            raise ShapeError(
                f"concat_channels: input[{i}] spatial shape {m.shape[1:]} != {hw}"
            )
    return np.concatenate(maps, axis=0)


def sum_all(x) -> np.ndarray:
    """Total of all entries as a 0-d array (the scalar loss terminal)."""
    return np.asarray(np.asarray(x, dtype=np.float64).sum())


def constant(value, like=None) -> np.ndarray:  # noqa: ARG001 - backend parity
    """Lift a plain array into this backend (identity for numpy arrays)."""
    return np.asarray(value, dtype=np.float64)
