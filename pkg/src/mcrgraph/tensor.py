"""Minimal reverse-mode autodiff on float64 numpy arrays.

Only the operations the models need are implemented. Each op records its
parents and a backward closure; :meth:`Tensor.backward` walks the graph in
reverse topological order and accumulates gradients into every tensor with
``requires_grad``. Ops on tensors that do not require gradients skip the
tape entirely, so inference carries no bookkeeping overhead.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .errors import DimensionMismatch, GraphDetached

ArrayLike = "np.ndarray | float | int | Sequence"


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a gradient over the axes that broadcasting expanded."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, dim in enumerate(shape):
        if dim == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad.reshape(shape)


class Tensor:
    """A float64 array plus optional gradient and autodiff lineage."""

    __slots__ = ("values", "requires_grad", "grad", "_parents", "_backward_fn")

    def __init__(self, values: ArrayLike, requires_grad: bool = False):
        self.values = np.asarray(values, dtype=np.float64)
        self.requires_grad = bool(requires_grad)
        self.grad: np.ndarray | None = None
        self._parents: tuple[Tensor, ...] = ()
        self._backward_fn: Callable[[np.ndarray], None] | None = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape

    def item(self) -> float:
        return float(self.values)

    def detach(self) -> "Tensor":
        return Tensor(self.values.copy())

    def zero_grad(self) -> None:
        self.grad = None

    def _accumulate(self, grad: np.ndarray) -> None:
        grad = _unbroadcast(np.asarray(grad, dtype=np.float64), self.values.shape)
        if self.grad is None:
            self.grad = np.zeros_like(self.values)
        self.grad += grad

    def backward(self) -> None:
        """Reverse-mode gradient accumulation from a scalar value."""
        if self.values.size != 1:
            raise ValueError(f"backward() requires a scalar, got shape {self.shape}")
        if not self._parents and not self.requires_grad:
            raise GraphDetached("value has no recorded lineage")

        order: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if id(parent) not in seen:
                    stack.append((parent, False))

        self._accumulate(np.ones_like(self.values))
        for node in reversed(order):
            if node._backward_fn is not None and node.grad is not None:
                node._backward_fn(node.grad)

    # Convenience operators; all defer to module-level ops.
    def __add__(self, other):
        return add(self, _wrap(other))

    def __radd__(self, other):
        return add(_wrap(other), self)

    def __sub__(self, other):
        return sub(self, _wrap(other))

    def __rsub__(self, other):
        return sub(_wrap(other), self)

    def __mul__(self, other):
        return mul(self, _wrap(other))

    def __rmul__(self, other):
        return mul(_wrap(other), self)

    def __matmul__(self, other):
        return matmul(self, _wrap(other))

    def __neg__(self):
        return mul(self, _wrap(-1.0))

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"


def _wrap(value) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def _make(values: np.ndarray, parents: tuple[Tensor, ...],
          backward_fn: Callable[[np.ndarray], None]) -> Tensor:
    out = Tensor(values)
    if any(p.requires_grad or p._parents for p in parents):
        out.requires_grad = True
        out._parents = parents
        out._backward_fn = backward_fn
    return out


def _needs(t: Tensor) -> bool:
    return t.requires_grad or bool(t._parents)


# --- arithmetic -----------------------------------------------------------------

def add(a: Tensor, b: Tensor) -> Tensor:
    def backward_fn(g):
        if _needs(a):
            a._accumulate(g)
        if _needs(b):
            b._accumulate(g)
    return _make(a.values + b.values, (a, b), backward_fn)


def sub(a: Tensor, b: Tensor) -> Tensor:
    def backward_fn(g):
        if _needs(a):
            a._accumulate(g)
        if _needs(b):
            b._accumulate(-g)
    return _make(a.values - b.values, (a, b), backward_fn)


def mul(a: Tensor, b: Tensor) -> Tensor:
    def backward_fn(g):
        if _needs(a):
            a._accumulate(g * b.values)
        if _needs(b):
            b._accumulate(g * a.values)
    return _make(a.values * b.values, (a, b), backward_fn)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.values.ndim != 2 or b.values.ndim != 2:
        raise DimensionMismatch(
            f"matmul expects 2-d operands, got {a.shape} @ {b.shape}")
    if a.values.shape[1] != b.values.shape[0]:
        raise DimensionMismatch(f"matmul inner dims differ: {a.shape} @ {b.shape}")

    def backward_fn(g):
        if _needs(a):
            a._accumulate(g @ b.values.T)
        if _needs(b):
            b._accumulate(a.values.T @ g)
    return _make(a.values @ b.values, (a, b), backward_fn)


# --- shape ops ------------------------------------------------------------------

def reshape(t: Tensor, shape: tuple[int, ...]) -> Tensor:
    original = t.values.shape

    def backward_fn(g):
        if _needs(t):
            t._accumulate(g.reshape(original))
    return _make(t.values.reshape(shape), (t,), backward_fn)


def transpose(t: Tensor) -> Tensor:
    if t.values.ndim != 2:
        raise DimensionMismatch(f"transpose expects a 2-d tensor, got {t.shape}")

    def backward_fn(g):
        if _needs(t):
            t._accumulate(g.T)
    return _make(t.values.T, (t,), backward_fn)


def concat(parts: Sequence[Tensor], axis: int = 0) -> Tensor:
    parts = tuple(parts)
    sizes = [p.values.shape[axis] for p in parts]
    offsets = np.cumsum([0] + sizes)

    def backward_fn(g):
        for part, lo, hi in zip(parts, offsets[:-1], offsets[1:]):
            if _needs(part):
                index = [slice(None)] * g.ndim
                index[axis] = slice(lo, hi)
                part._accumulate(g[tuple(index)])
    return _make(np.concatenate([p.values for p in parts], axis=axis), parts, backward_fn)


def take_rows(t: Tensor, indices) -> Tensor:
    """Row gather (embedding lookup); backward scatter-adds into the source."""
    idx = np.asarray(indices, dtype=np.int64)
    if t.values.ndim != 2:
        raise DimensionMismatch(f"take_rows expects a 2-d tensor, got {t.shape}")

    def backward_fn(g):
        if _needs(t):
            buf = np.zeros_like(t.values)
            np.add.at(buf, idx, g)
            t._accumulate(buf)
    return _make(t.values[idx], (t,), backward_fn)


# --- reductions -----------------------------------------------------------------

def reduce_sum(t: Tensor, axis: int | None = None) -> Tensor:
    def backward_fn(g):
        if not _needs(t):
            return
        if axis is None:
            t._accumulate(np.broadcast_to(g, t.values.shape))
        else:
            t._accumulate(np.broadcast_to(np.expand_dims(g, axis), t.values.shape))
    return _make(t.values.sum(axis=axis), (t,), backward_fn)


def reduce_mean(t: Tensor, axis: int | None = None) -> Tensor:
    n = t.values.size if axis is None else t.values.shape[axis]
    return mul(reduce_sum(t, axis=axis), _wrap(1.0 / n))


# --- nonlinearities --------------------------------------------------------------

def relu(t: Tensor) -> Tensor:
    keep = t.values > 0.0

    def backward_fn(g):
        if _needs(t):
            t._accumulate(g * keep)
    return _make(np.where(keep, t.values, 0.0), (t,), backward_fn)


def leaky_relu(t: Tensor, slope: float = 0.2) -> Tensor:
    keep = t.values > 0.0

    def backward_fn(g):
        if _needs(t):
            t._accumulate(g * np.where(keep, 1.0, slope))
    return _make(np.where(keep, t.values, slope * t.values), (t,), backward_fn)


def sigmoid(t: Tensor) -> Tensor:
    out_values = 1.0 / (1.0 + np.exp(-t.values))

    def backward_fn(g):
        if _needs(t):
            t._accumulate(g * out_values * (1.0 - out_values))
    return _make(out_values, (t,), backward_fn)


def exp(t: Tensor) -> Tensor:
    out_values = np.exp(t.values)

    def backward_fn(g):
        if _needs(t):
            t._accumulate(g * out_values)
    return _make(out_values, (t,), backward_fn)


def log(t: Tensor) -> Tensor:
    def backward_fn(g):
        if _needs(t):
            t._accumulate(g / t.values)
    return _make(np.log(t.values), (t,), backward_fn)


# --- softmax family --------------------------------------------------------------

def row_softmax(t: Tensor) -> Tensor:
    """Softmax over the last axis; rows sum to 1."""
    shifted = t.values - t.values.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    out_values = e / e.sum(axis=-1, keepdims=True)

    def backward_fn(g):
        if _needs(t):
            dot = (g * out_values).sum(axis=-1, keepdims=True)
            t._accumulate(out_values * (g - dot))
    return _make(out_values, (t,), backward_fn)


def log_softmax(t: Tensor) -> Tensor:
    shifted = t.values - t.values.max(axis=-1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=-1, keepdims=True))
    out_values = shifted - log_z
    soft = np.exp(out_values)

    def backward_fn(g):
        if _needs(t):
            t._accumulate(g - soft * g.sum(axis=-1, keepdims=True))
    return _make(out_values, (t,), backward_fn)
