"""Reverse-mode autodiff on numpy arrays, sized for small recurrent nets.

Every op builds a node in a computation graph; ``backward()`` on a scalar
loss walks the graph once in reverse topological order and accumulates
gradients into ``Tensor.grad``. Training runs the same code in float32,
gradient checking in float64.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "Tensor",
    "ShapeError",
    "GraphError",
    "no_grad",
    "constant",
    "parameter",
    "affine",
    "matmul",
    "sigmoid",
    "tanh",
    "relu",
    "absval",
    "square",
    "concat",
    "narrow",
    "reshape",
    "tsum",
    "tmean",
    "softmax_nll",
    "straight_through",
    "stop_gradient",
    "gather_rows",
    "softmax",
]

_FLOAT_DTYPES = (np.float32, np.float64)


class ShapeError(ValueError):
    """Operand shapes do not agree with an op's contract."""


class GraphError(RuntimeError):
    """Graph misuse: backward on a non-scalar, backward before forward, etc."""


class _GradMode:
    enabled = True


class no_grad:
    """Context manager that disables graph recording (inference/eval paths)."""

    def __enter__(self):
        self._prev = _GradMode.enabled
        _GradMode.enabled = False
        return self

    def __exit__(self, *exc):
        _GradMode.enabled = self._prev
        return False


class Tensor:
    """A dense float array plus an optional gradient of identical shape."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward_fn")

    def __init__(self, data, requires_grad: bool = False, dtype=None):
        arr = np.asarray(data, dtype=dtype)
        if arr.dtype not in _FLOAT_DTYPES:
            arr = arr.astype(np.float32)
        self.data: np.ndarray = arr
        self.grad: np.ndarray | None = None
        self.requires_grad = bool(requires_grad)
        self._parents: tuple[Tensor, ...] = ()
        self._backward_fn = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def item(self) -> float:
        return float(self.data)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype.name}, requires_grad={self.requires_grad})"

    # -- arithmetic sugar ---------------------------------------------------

    def __add__(self, other):
        return _add(self, _as_tensor(other, like=self))

    __radd__ = __add__

    def __sub__(self, other):
        return _add(self, _neg(_as_tensor(other, like=self)))

    def __rsub__(self, other):
        return _add(_as_tensor(other, like=self), _neg(self))

    def __mul__(self, other):
        return _mul(self, _as_tensor(other, like=self))

    __rmul__ = __mul__

    def __neg__(self):
        return _neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def sum(self):
        return tsum(self)

    def mean(self):
        return tmean(self)

    # -- backward pass ------------------------------------------------------

    def backward(self, params: Iterable["Tensor"] | None = None) -> None:
        """Populate ``grad`` over the graph ending in this scalar.

        ``params``, when given, are pre-zeroed so parameters disconnected
        from the loss end up with an exact zero gradient instead of None.
        Each graph node is visited exactly once, in reverse topological
        order.
        """
        if self.data.size != 1:
            raise GraphError("backward() requires a scalar loss node")
        if self._backward_fn is None and not self.requires_grad:
            raise GraphError("backward() on a node with no recorded graph")
        if params is not None:
            for p in params:
                p.grad = np.zeros_like(p.data)
        topo = _toposort(self)
        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            fn = node._backward_fn
            if fn is not None and node.grad is not None:
                fn(node.grad)


def constant(data, dtype=np.float32) -> Tensor:
    """A leaf that never receives gradient (inputs, one-hots, masks)."""
    return Tensor(np.asarray(data, dtype=dtype), requires_grad=False)


def parameter(data, dtype=np.float32) -> Tensor:
    """A trainable leaf."""
    return Tensor(np.asarray(data, dtype=dtype), requires_grad=True)


def _as_tensor(x, like: Tensor) -> Tensor:
    if isinstance(x, Tensor):
        return x
    return Tensor(np.asarray(x, dtype=like.data.dtype), requires_grad=False)


def _toposort(root: Tensor) -> list[Tensor]:
    # Iterative DFS: BPTT graphs over 128 steps are far deeper than the
    # interpreter's recursion limit.
    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in seen:
                stack.append((p, False))
    return order


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to the operand's shape."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _accum(t: Tensor, grad: np.ndarray) -> None:
    if not t.requires_grad:
        return
    if t.grad is None:
        t.grad = np.zeros_like(t.data)
    t.grad += grad


def _node(data: np.ndarray, parents: tuple[Tensor, ...], backward_fn) -> Tensor:
    out = Tensor(data)
    if _GradMode.enabled and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = parents
        out._backward_fn = backward_fn
    return out


# -- elementwise ops ---------------------------------------------------------


def _add(a: Tensor, b: Tensor) -> Tensor:
    data = a.data + b.data

    def bwd(g):
        _accum(a, _unbroadcast(g, a.data.shape))
        _accum(b, _unbroadcast(g, b.data.shape))

    return _node(data, (a, b), bwd)


def _mul(a: Tensor, b: Tensor) -> Tensor:
    data = a.data * b.data

    def bwd(g):
        _accum(a, _unbroadcast(g * b.data, a.data.shape))
        _accum(b, _unbroadcast(g * a.data, b.data.shape))

    return _node(data, (a, b), bwd)


def _neg(a: Tensor) -> Tensor:
    def bwd(g):
        _accum(a, -g)

    return _node(-a.data, (a,), bwd)


def sigmoid(a: Tensor) -> Tensor:
    # exp formulated on the negative half-line for stability in f32
    x = a.data
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)

    def bwd(g):
        _accum(a, g * out * (1.0 - out))

    return _node(out, (a,), bwd)


def tanh(a: Tensor) -> Tensor:
    out = np.tanh(a.data)

    def bwd(g):
        _accum(a, g * (1.0 - out * out))

    return _node(out, (a,), bwd)


def relu(a: Tensor) -> Tensor:
    mask = a.data > 0

    def bwd(g):
        _accum(a, g * mask)

    return _node(a.data * mask, (a,), bwd)


def absval(a: Tensor) -> Tensor:
    sign = np.sign(a.data)

    def bwd(g):
        _accum(a, g * sign)

    return _node(np.abs(a.data), (a,), bwd)


def square(a: Tensor) -> Tensor:
    def bwd(g):
        _accum(a, g * 2.0 * a.data)

    return _node(a.data * a.data, (a,), bwd)


# -- shape ops ----------------------------------------------------------------


def reshape(a: Tensor, shape: Sequence[int]) -> Tensor:
    shape = tuple(shape)

    def bwd(g):
        _accum(a, g.reshape(a.data.shape))

    return _node(a.data.reshape(shape), (a,), bwd)


def concat(parts: Sequence[Tensor], axis: int = 1) -> Tensor:
    if not parts:
        raise ShapeError("concat of zero tensors")
    data = np.concatenate([p.data for p in parts], axis=axis)
    sizes = [p.data.shape[axis] for p in parts]
    offsets = np.cumsum([0] + sizes)

    def bwd(g):
        for p, lo, hi in zip(parts, offsets[:-1], offsets[1:]):
            idx = [slice(None)] * g.ndim
            idx[axis] = slice(lo, hi)
            _accum(p, g[tuple(idx)])

    return _node(data, tuple(parts), bwd)


def narrow(a: Tensor, axis: int, start: int, stop: int) -> Tensor:
    idx = [slice(None)] * a.data.ndim
    idx[axis] = slice(start, stop)
    idx = tuple(idx)

    def bwd(g):
        if not a.requires_grad:
            return
        if a.grad is None:
            a.grad = np.zeros_like(a.data)
        a.grad[idx] += g

    return _node(a.data[idx].copy(), (a,), bwd)


# -- reductions ---------------------------------------------------------------


def tsum(a: Tensor) -> Tensor:
    def bwd(g):
        _accum(a, np.full_like(a.data, float(g)))

    return _node(np.asarray(a.data.sum(), dtype=a.data.dtype), (a,), bwd)


def tmean(a: Tensor) -> Tensor:
    n = a.data.size

    def bwd(g):
        _accum(a, np.full_like(a.data, float(g) / n))

    return _node(np.asarray(a.data.mean(), dtype=a.data.dtype), (a,), bwd)


# -- linear algebra -------------------------------------------------------------


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim != 2 or b.data.ndim != 2:
        raise ShapeError(f"matmul expects 2-D operands, got {a.data.shape} @ {b.data.shape}")
    if a.data.shape[1] != b.data.shape[0]:
        raise ShapeError(f"matmul shape mismatch: {a.data.shape} @ {b.data.shape}")
    data = a.data @ b.data

    def bwd(g):
        _accum(a, g @ b.data.T)
        _accum(b, a.data.T @ g)

    return _node(data, (a, b), bwd)


def affine(W: Tensor, b: Tensor | None, x: Tensor) -> Tensor:
    """y = x W^T + b with W of shape [out, in]; x is [in] or [batch, in]."""
    if W.data.ndim != 2:
        raise ShapeError(f"affine weight must be 2-D, got {W.data.shape}")
    vec_in = x.data.ndim == 1
    if x.data.ndim not in (1, 2) or x.data.shape[-1] != W.data.shape[1]:
        raise ShapeError(f"affine input {x.data.shape} does not match weight {W.data.shape}")
    if b is not None and b.data.shape != (W.data.shape[0],):
        raise ShapeError(f"affine bias {b.data.shape} does not match weight {W.data.shape}")
    x2 = x.data.reshape(1, -1) if vec_in else x.data
    data = x2 @ W.data.T
    if b is not None:
        data = data + b.data
    if vec_in:
        data = data[0]

    def bwd(g):
        g2 = g.reshape(1, -1) if vec_in else g
        xin = x.data.reshape(1, -1) if vec_in else x.data
        gx = g2 @ W.data
        _accum(x, gx[0] if vec_in else gx)
        _accum(W, g2.T @ xin)
        if b is not None:
            _accum(b, g2.sum(axis=0))

    parents = (W, x) if b is None else (W, b, x)
    return _node(data, parents, bwd)


# -- softmax cross-entropy -------------------------------------------------------


def softmax(logits: np.ndarray, axis: int = -1) -> np.ndarray:
    """Plain numpy stable softmax (inference helper, not a graph op)."""
    z = logits - logits.max(axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


def softmax_nll(logits: Tensor, target) -> Tensor:
    """Negative log-likelihood of ``target`` under softmax(logits).

    1-D logits with an int target give a scalar; [N, V] logits with an int
    array of N targets give a length-N loss vector. Max-subtraction keeps
    the log-sum-exp finite for any finite logits.
    """
    vec_in = logits.data.ndim == 1
    z = logits.data.reshape(1, -1) if vec_in else logits.data
    if z.ndim != 2:
        raise ShapeError(f"softmax_nll expects 1-D or 2-D logits, got {logits.data.shape}")
    targets = np.atleast_1d(np.asarray(target, dtype=np.int64))
    n, v = z.shape
    if targets.shape != (n,):
        raise ShapeError(f"expected {n} targets, got shape {targets.shape}")
    if targets.min() < 0 or targets.max() >= v:
        raise IndexError(f"target out of range [0, {v})")
    m = z.max(axis=1, keepdims=True)
    shifted = z - m
    lse = np.log(np.exp(shifted).sum(axis=1))
    losses = lse - shifted[np.arange(n), targets]
    data = losses[0] if vec_in else losses

    def bwd(g):
        p = softmax(z, axis=1)
        p[np.arange(n), targets] -= 1.0
        gmat = np.asarray(g).reshape(-1, 1)
        gl = p * gmat
        _accum(logits, gl[0] if vec_in else gl)

    return _node(np.asarray(data, dtype=z.dtype), (logits,), bwd)


# -- quantizer plumbing ------------------------------------------------------------


def straight_through(a: Tensor, values: np.ndarray) -> Tensor:
    """Forward ``values``, backward identity into ``a`` (the ST estimator)."""
    if values.shape != a.data.shape:
        raise ShapeError(f"straight_through values {values.shape} != input {a.data.shape}")

    def bwd(g):
        _accum(a, g)

    return _node(np.asarray(values, dtype=a.data.dtype), (a,), bwd)


def stop_gradient(a: Tensor) -> Tensor:
    """Forward copy that blocks all gradient flow."""
    return Tensor(a.data.copy())


def gather_rows(table: Tensor, idx: np.ndarray) -> Tensor:
    """Rows ``table[idx]``; backward scatter-adds into the gathered rows."""
    idx = np.asarray(idx, dtype=np.int64)
    if table.data.ndim != 2:
        raise ShapeError("gather_rows expects a 2-D table")

    def bwd(g):
        if not table.requires_grad:
            return
        if table.grad is None:
            table.grad = np.zeros_like(table.data)
        np.add.at(table.grad, idx, g)

    return _node(table.data[idx], (table,), bwd)
