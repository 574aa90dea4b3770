"""Reverse-mode differentiation tape over the dense-map kernels.

This module mirrors the :mod:`gatedcrf.tensor_ops` function surface, so the
inference and model code runs unchanged on either backend. Each operation
records its output value, parent indices and a backward closure on the tape;
recording order is a topological order, and ``Tape.backward`` walks it in
exact reverse, accumulating gradients with a fixed order (bit-deterministic).

Backward closures keep references to saved forward activations rather than
recomputing them; at the map sizes this library targets that is cheap.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import tensor_ops


@dataclass
class _Node:
    op: str
    parents: tuple[int, ...]
    value: np.ndarray
    # recompute value from parent values; None for leaves
    fwd: Optional[Callable]
    # map output gradient to one gradient per parent; None for leaves
    bwd: Optional[Callable]
    name: Optional[str] = None
    grad: Optional[np.ndarray] = None


class Var:
    """Handle to one tape node; carries the forward value and, after
    ``Tape.backward``, the accumulated gradient."""

    __slots__ = ("tape", "index")

    def __init__(self, tape: "Tape", index: int):
        self.tape = tape
        self.index = index

    @property
    def value(self) -> np.ndarray:
        return self.tape.nodes[self.index].value

    @property
    def shape(self) -> tuple:
        return self.tape.nodes[self.index].value.shape

    @property
    def grad(self) -> np.ndarray:
        g = self.tape.nodes[self.index].grad
        return np.zeros_like(self.value) if g is None else g

    def __repr__(self) -> str:
        node = self.tape.nodes[self.index]
        return f"Var(op={node.op!r}, shape={self.shape})"


class Tape:
    """Recorded operation graph for one scalar-rooted computation.

    A tape is single-threaded state; independent tapes may run concurrently.
    """

    def __init__(self):
        self.nodes: list[_Node] = []

    def var(self, value, name: str | None = None) -> Var:
        """Register a leaf (parameter or input)."""
        value = np.asarray(value, dtype=np.float64)
        self.nodes.append(_Node("leaf", (), value, None, None, name=name))
        return Var(self, len(self.nodes) - 1)

    def constant(self, value) -> Var:
        return self.var(value, name=None)

    def record(self, op: str, parents: tuple[Var, ...], value, fwd, bwd) -> Var:
        for p in parents:
            if p.tape is not self:
                raise ValueError(f"{op}: operand belongs to a different tape")
        value = np.asarray(value, dtype=np.float64)
        self.nodes.append(
            _Node(op, tuple(p.index for p in parents), value, fwd, bwd)
        )
        return Var(self, len(self.nodes) - 1)

    def backward(self, root: Var, seed: float = 1.0) -> None:
        """Accumulate d(root)/d(node) into every node, reverse topological order."""
        if root.tape is not self:
            raise ValueError("root belongs to a different tape")
        if root.value.size != 1:
            raise ValueError(
                f"backward root must be scalar, got shape {root.value.shape}"
            )
        for node in self.nodes:
            node.grad = None
        root_node = self.nodes[root.index]
        root_node.grad = np.full_like(root_node.value, float(seed))
        for idx in range(root.index, -1, -1):
            node = self.nodes[idx]
            if node.grad is None or node.bwd is None:
                continue
            parent_grads = node.bwd(node.grad)
            for pidx, g in zip(node.parents, parent_grads):
                if g is None:
                    continue
                parent = self.nodes[pidx]
                if parent.grad is None:
                    parent.grad = np.zeros_like(parent.value)
                parent.grad += g

    def replay_bitexact(self) -> bool:
        """Recompute every non-leaf from its parents; True iff all outputs match
        the recorded values bit for bit."""
        for node in self.nodes:
            if node.fwd is None:
                continue
            recomputed = node.fwd(*(self.nodes[p].value for p in node.parents))
            if recomputed.shape != node.value.shape or not np.array_equal(
                recomputed, node.value
            ):
                return False
        return True


@dataclass
class GradientSet:
    """Gradients of a scalar loss, shape-matched to their primals."""

    d_X: list[np.ndarray] = field(default_factory=list)
    d_K: list[np.ndarray] = field(default_factory=list)
    d_beta: list[np.ndarray] = field(default_factory=list)
    d_params: dict[str, np.ndarray] = field(default_factory=dict)


def collect_gradients(
    X_vars=(), K_vars=(), beta_vars=(), param_vars: dict | None = None
) -> GradientSet:
    """Pull accumulated gradients off leaf Vars after ``Tape.backward``."""
    return GradientSet(
        d_X=[v.grad for v in X_vars],
        d_K=[v.grad for v in K_vars],
        d_beta=[v.grad for v in beta_vars],
        d_params={k: v.grad for k, v in (param_vars or {}).items()},
    )


def _reduce_to(g: np.ndarray, shape: tuple) -> np.ndarray:
    # Undo the single sanctioned broadcast: (1, H, W) across channels.
    if g.shape == shape:
        return g
    return g.sum(axis=0, keepdims=True)


def add(a: Var, b: Var) -> Var:
    v = tensor_ops.add(a.value, b.value)
    bshape = b.value.shape

    def bwd(g):
        return g, _reduce_to(g, bshape)

    return a.tape.record("add", (a, b), v, tensor_ops.add, bwd)


def sub(a: Var, b: Var) -> Var:
    v = tensor_ops.sub(a.value, b.value)
    bshape = b.value.shape

    def bwd(g):
        return g, _reduce_to(-g, bshape)

    return a.tape.record("sub", (a, b), v, tensor_ops.sub, bwd)


def mul(a: Var, b: Var) -> Var:
    v = tensor_ops.mul(a.value, b.value)
    aval, bval = a.value, b.value

    def bwd(g):
        return g * bval, _reduce_to(g * aval, bval.shape)

    return a.tape.record("mul", (a, b), v, tensor_ops.mul, bwd)


def negate(x: Var) -> Var:
    return x.tape.record(
        "negate", (x,), tensor_ops.negate(x.value), tensor_ops.negate, lambda g: (-g,)
    )


def scale(x: Var, c: float) -> Var:
    c = float(c)
    return x.tape.record(
        "scale",
        (x,),
        tensor_ops.scale(x.value, c),
        lambda xv: tensor_ops.scale(xv, c),
        lambda g: (c * g,),
    )


def sigmoid(x: Var) -> Var:
    out = tensor_ops.sigmoid(x.value)

    def bwd(g):
        return (g * out * (1.0 - out),)

    return x.tape.record("sigmoid", (x,), out, tensor_ops.sigmoid, bwd)


def conv2d(x: Var, k: Var) -> Var:
    v = tensor_ops.conv2d(x.value, k.value)
    kval = k.value
    cols = tensor_ops._im2col(x.value)

    def bwd(g):
        # Input gradient: correlate with the spatially flipped,
        # channel-transposed kernel (padding keeps sizes aligned).
        k_flip = np.ascontiguousarray(kval.transpose(1, 0, 2, 3)[:, :, ::-1, ::-1])
        dx = tensor_ops.conv2d(g, k_flip)
        c_out = g.shape[0]
        dk = np.einsum("op,jp->oj", g.reshape(c_out, -1), cols).reshape(kval.shape)
        return dx, dk

    return x.tape.record("conv2d", (x, k), v, tensor_ops.conv2d, bwd)


def channel_sum(x: Var) -> Var:
    c = x.value.shape[0]

    def bwd(g):
        return (np.broadcast_to(g, (c,) + g.shape[1:]).copy(),)

    return x.tape.record(
        "channel_sum", (x,), tensor_ops.channel_sum(x.value), tensor_ops.channel_sum, bwd
    )


def upsample2x(x: Var) -> Var:
    v = tensor_ops.upsample2x(x.value)
    _, h, w = x.value.shape
    i0, i1, t = tensor_ops._lerp_axis(h)
    j0, j1, u = tensor_ops._lerp_axis(w)

    def bwd(g):
        # Reverse the column lerp, then the row lerp, via scatter-adds
        # (np.add.at accumulates sequentially: deterministic).
        d_rows = np.zeros((g.shape[0], 2 * h, w))
        gt = g.transpose(2, 0, 1)
        drt = d_rows.transpose(2, 0, 1)
        np.add.at(drt, j0, gt * (1.0 - u)[:, None, None])
        np.add.at(drt, j1, gt * u[:, None, None])
        dx = np.zeros((g.shape[0], h, w))
        drh = d_rows.transpose(1, 0, 2)
        dxh = dx.transpose(1, 0, 2)
        np.add.at(dxh, i0, drh * (1.0 - t)[:, None, None])
        np.add.at(dxh, i1, drh * t[:, None, None])
        return (dx,)

    return x.tape.record("upsample2x", (x,), v, tensor_ops.upsample2x, bwd)


def deconv2x(x: Var, k: Var) -> Var:
    v = tensor_ops.deconv2x(x.value, k.value)
    xval, kval = x.value, k.value
    _, h, w = xval.shape
    c_out = kval.shape[1]

    def bwd(g):
        blocks = g.reshape(c_out, h, 2, w, 2)
        dx = np.einsum("ohuwv,iouv->ihw", blocks, kval)
        dk = np.einsum("ihw,ohuwv->iouv", xval, blocks)
        return dx, dk

    return x.tape.record("deconv2x", (x, k), v, tensor_ops.deconv2x, bwd)


def avgpool2x(x: Var) -> Var:
    v = tensor_ops.avgpool2x(x.value)

    def bwd(g):
        return (0.25 * np.repeat(np.repeat(g, 2, axis=1), 2, axis=2),)

    return x.tape.record("avgpool2x", (x,), v, tensor_ops.avgpool2x, bwd)


def concat_channels(xs) -> Var:
    xs = list(xs)
    v = tensor_ops.concat_channels([x.value for x in xs])
    sizes = [x.value.shape[0] for x in xs]
    edges = np.cumsum([0] + sizes)

    def bwd(g):
        return tuple(g[a:b] for a, b in zip(edges[:-1], edges[1:]))

    return xs[0].tape.record(
        "concat_channels",
        tuple(xs),
        v,
        lambda *vals: tensor_ops.concat_channels(vals),
        bwd,
    )


def sum_all(x: Var) -> Var:
    shape = x.value.shape

    def bwd(g):
        return (np.full(shape, float(g)),)

    return x.tape.record("sum_all", (x,), tensor_ops.sum_all(x.value), tensor_ops.sum_all, bwd)


def constant(value, like: Var) -> Var:
    """Lift a plain array onto the tape that ``like`` lives on."""
    if not isinstance(like, Var):
        raise TypeError("autodiff.constant needs an existing Var to locate the tape")
    return like.tape.constant(value)
