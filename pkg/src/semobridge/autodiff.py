"""Minimal reverse-mode gradient engine over float64 numpy arrays.

Just enough surface for the bridge-training loss graph: elementwise
arithmetic with broadcasting, matmul, reductions, exp/log, a zero-safe row
norm, row gather, and a stable logsumexp. Gradients accumulate into leaf
nodes created with ``needs_grad=True``; everything stays float64.
"""
from __future__ import annotations

import numpy as np


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum a broadcasted gradient back down to the original shape."""
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


class Var:
    """A node in the computation graph: a value plus how to push grads back."""

    __slots__ = ("value", "grad", "needs_grad", "_parents", "_backward")

    def __init__(self, value, parents=(), backward=None, needs_grad=False):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad = None
        self._parents = tuple(p for p in parents if p.needs_grad)
        self._backward = backward
        self.needs_grad = needs_grad or bool(self._parents)

    @property
    def shape(self):
        return self.value.shape

    def _accumulate(self, g):
        g = _unbroadcast(np.asarray(g, dtype=np.float64), self.value.shape)
        self.grad = g if self.grad is None else self.grad + g

    def backward(self):
        """Reverse-accumulate gradients from this scalar node."""
        if self.value.size != 1:
            raise ValueError("backward() requires a scalar root")
        order, seen = [], set()

        def visit(node):
            if id(node) in seen or not node.needs_grad:
                return
            seen.add(id(node))
            for p in node._parents:
                visit(p)
            order.append(node)

        visit(self)
        self.grad = np.ones_like(self.value)
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    # -- elementwise arithmetic ------------------------------------------
    def __add__(self, other):
        other = _lift(other)
        out = Var(self.value + other.value, (self, other))
        out._backward = lambda g: (
            self.needs_grad and self._accumulate(g),
            other.needs_grad and other._accumulate(g),
        )
        return out

    __radd__ = __add__

    def __neg__(self):
        out = Var(-self.value, (self,))
        out._backward = lambda g: self.needs_grad and self._accumulate(-g)
        return out

    def __sub__(self, other):
        return self + (-_lift(other))

    def __rsub__(self, other):
        return _lift(other) + (-self)

    def __mul__(self, other):
        other = _lift(other)
        out = Var(self.value * other.value, (self, other))
        out._backward = lambda g: (
            self.needs_grad and self._accumulate(g * other.value),
            other.needs_grad and other._accumulate(g * self.value),
        )
        return out

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _lift(other)
        out = Var(self.value / other.value, (self, other))
        out._backward = lambda g: (
            self.needs_grad and self._accumulate(g / other.value),
            other.needs_grad
            and other._accumulate(-g * self.value / (other.value * other.value)),
        )
        return out

    def __rtruediv__(self, other):
        return _lift(other) / self


def _lift(x) -> Var:
    return x if isinstance(x, Var) else Var(x)


def matmul(a: Var, b: Var) -> Var:
    a, b = _lift(a), _lift(b)
    out = Var(a.value @ b.value, (a, b))
    out._backward = lambda g: (
        a.needs_grad and a._accumulate(g @ b.value.T),
        b.needs_grad and b._accumulate(a.value.T @ g),
    )
    return out


def transpose(a: Var) -> Var:
    out = Var(a.value.T, (a,))
    out._backward = lambda g: a.needs_grad and a._accumulate(g.T)
    return out


def vsum(a: Var, axis=None, keepdims=False) -> Var:
    out = Var(a.value.sum(axis=axis, keepdims=keepdims), (a,))

    def back(g):
        if not a.needs_grad:
            return
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        a._accumulate(np.broadcast_to(g, a.value.shape))

    out._backward = back
    return out


def vmean(a: Var, axis=None, keepdims=False) -> Var:
    n = a.value.size if axis is None else a.value.shape[axis]
    return vsum(a, axis=axis, keepdims=keepdims) * (1.0 / n)


def exp(a: Var) -> Var:
    e = np.exp(a.value)
    out = Var(e, (a,))
    out._backward = lambda g: a.needs_grad and a._accumulate(g * e)
    return out


def log(a: Var) -> Var:
    out = Var(np.log(a.value), (a,))
    out._backward = lambda g: a.needs_grad and a._accumulate(g / a.value)
    return out


def row_norm(a: Var, tiny: float = 1e-30) -> Var:
    """L2 norm of each row, shape (n, 1). Gradient is 0 at exactly-zero rows.

    The zero-row subgradient choice keeps the bias-variance penalty finite
    when class biases start at the origin.
    """
    norms = np.sqrt((a.value * a.value).sum(axis=1, keepdims=True))
    out = Var(norms, (a,))
    out._backward = lambda g: a.needs_grad and a._accumulate(
        g * a.value / np.maximum(norms, tiny)
    )
    return out


def normalize(a: Var) -> Var:
    """Rows rescaled to unit norm; rows must be nonzero."""
    return a / row_norm(a)


def gather_rows(a: Var, index: np.ndarray) -> Var:
    index = np.asarray(index, dtype=np.int64)
    out = Var(a.value[index], (a,))

    def back(g):
        if not a.needs_grad:
            return
        acc = np.zeros_like(a.value)
        np.add.at(acc, index, g)
        a._accumulate(acc)

    out._backward = back
    return out


def logsumexp_rows(a: Var) -> Var:
    m = a.value.max(axis=1, keepdims=True)
    e = np.exp(a.value - m)
    s = e.sum(axis=1, keepdims=True)
    out = Var(m + np.log(s), (a,))
    out._backward = lambda g: a.needs_grad and a._accumulate(g * (e / s))
    return out


def cross_entropy_mean(logits: Var, targets: np.ndarray, temperature: float) -> Var:
    """Mean over rows of -sum(target * log softmax(logits * temperature))."""
    z = logits * float(temperature)
    per_row = logsumexp_rows(z) - vsum(z * np.asarray(targets, dtype=np.float64),
                                       axis=1, keepdims=True)
    return vmean(per_row)
