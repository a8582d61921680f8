"""Dense float64 tensors with a reverse-mode tape.

Every op in this module builds a new :class:`Tensor`. When any input
requires a gradient the result remembers its parents and a closure that
pushes the output gradient back to them; :meth:`Tensor.backward` replays
those closures in reverse topological order.

Only 0-, 1- and 2-D arrays are expected. Elementwise ops follow numpy
broadcasting and fold the gradient back onto the original input shape.
"""
from __future__ import annotations

import contextlib
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import sparse
from scipy.special import expit

from ..errors import ConfigError, DomainError, NumericError, ShapeError

_GRAD_ENABLED = True


@contextlib.contextmanager
def no_grad():
    """Disable tape recording inside the block (evaluation passes)."""
    global _GRAD_ENABLED
    previous = _GRAD_ENABLED
    _GRAD_ENABLED = False
    try:
        yield
    finally:
        _GRAD_ENABLED = previous


class Tensor:
    __slots__ = ("values", "grad", "requires_grad", "_parents", "_backward", "name")

    def __init__(self, values, requires_grad: bool = False, name: str | None = None):
        arr = np.array(values, dtype=np.float64)
        if not np.isfinite(arr).all():
            raise NumericError(f"non-finite values in tensor {name or ''}".strip())
        self.values = arr
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._parents: tuple[Tensor, ...] = ()
        self._backward: Callable[[np.ndarray], None] | None = None
        self.name = name

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape

    @property
    def T(self) -> "Tensor":
        return transpose(self)

    def __repr__(self):
        label = f" {self.name!r}" if self.name else ""
        return f"Tensor{label}(shape={self.shape}, requires_grad={self.requires_grad})"

    def __len__(self):
        return self.values.shape[0]

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, other)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def item(self) -> float:
        return float(self.values)

    def numpy(self) -> np.ndarray:
        return self.values

    def zero_grad(self):
        self.grad = None

    def accumulate(self, g: np.ndarray):
        if self.grad is None:
            self.grad = np.array(g, dtype=np.float64, copy=True)
        else:
            self.grad += g

    def backward(self, grad=None):
        """Accumulate d(self)/d(leaf) into ``.grad`` of every reachable leaf."""
        if grad is None:
            if self.values.size != 1:
                raise ShapeError(f"backward() without a seed needs a scalar, got shape {self.shape}")
            grad = np.ones_like(self.values)
        order = _topological(self)
        self.accumulate(np.asarray(grad, dtype=np.float64).reshape(self.shape))
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)
                # intermediate gradients are not needed after propagation
                if node._parents:
                    node.grad = None if node is not self else node.grad


def _topological(root: Tensor) -> list[Tensor]:
    order: list[Tensor] = []
    seen: set[int] = set()
    stack = [(root, False)]
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


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def tensor(values, requires_grad: bool = False, name: str | None = None) -> Tensor:
    return Tensor(values, requires_grad=requires_grad, name=name)


def zeros(*shape: int, requires_grad: bool = False) -> Tensor:
    return Tensor(np.zeros(shape), requires_grad=requires_grad)


def ones(*shape: int, requires_grad: bool = False) -> Tensor:
    return Tensor(np.ones(shape), requires_grad=requires_grad)


def _result(values: np.ndarray, parents: Sequence[Tensor], backward) -> Tensor:
    if not np.isfinite(values).all():
        raise NumericError("operation produced non-finite values")
    out = Tensor.__new__(Tensor)
    out.values = values
    out.grad = None
    out.name = None
    tracked = _GRAD_ENABLED and any(p.requires_grad for p in parents)
    out.requires_grad = tracked
    if tracked:
        out._parents = tuple(parents)
        out._backward = backward
    else:
        out._parents = ()
        out._backward = None
    return out


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def _broadcast_shape(a: Tensor, b: Tensor, op: str) -> None:
    if a.values.shape == b.values.shape:
        return
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(f"{op}: cannot broadcast shapes {a.shape} and {b.shape}") from None


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "add")

    def backward(g):
        if a.requires_grad:
            a.accumulate(_unbroadcast(g, a.shape))
        if b.requires_grad:
            b.accumulate(_unbroadcast(g, b.shape))

    return _result(a.values + b.values, (a, b), backward)


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "sub")

    def backward(g):
        if a.requires_grad:
            a.accumulate(_unbroadcast(g, a.shape))
        if b.requires_grad:
            b.accumulate(_unbroadcast(-g, b.shape))

    return _result(a.values - b.values, (a, b), backward)


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "mul")

    def backward(g):
        if a.requires_grad:
            a.accumulate(_unbroadcast(g * b.values, a.shape))
        if b.requires_grad:
            b.accumulate(_unbroadcast(g * a.values, b.shape))

    return _result(a.values * b.values, (a, b), backward)


def div(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "div")
    if np.any(b.values == 0):
        raise NumericError("division by zero")
    out_values = a.values / b.values

    def backward(g):
        if a.requires_grad:
            a.accumulate(_unbroadcast(g / b.values, a.shape))
        if b.requires_grad:
            b.accumulate(_unbroadcast(-g * out_values / b.values, b.shape))

    return _result(out_values, (a, b), backward)


def neg(a) -> Tensor:
    a = as_tensor(a)

    def backward(g):
        a.accumulate(-g)

    return _result(-a.values, (a,), backward)


def matmul(a, b) -> Tensor:
    """Matrix product of 2-D tensors (a 1-D right operand is a column)."""
    a, b = as_tensor(a), as_tensor(b)
    if a.values.ndim != 2 or b.values.ndim not in (1, 2) or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: incompatible shapes {a.shape} and {b.shape}")

    def backward(g):
        if a.requires_grad:
            if b.values.ndim == 1:
                a.accumulate(np.outer(g, b.values))
            else:
                a.accumulate(g @ b.values.T)
        if b.requires_grad:
            b.accumulate(a.values.T @ g)

    return _result(a.values @ b.values, (a, b), backward)


def spmm(A: sparse.spmatrix, x) -> Tensor:
    """Product of a constant sparse matrix with a dense tensor."""
    x = as_tensor(x)
    if A.shape[1] != x.shape[0]:
        raise ShapeError(f"spmm: incompatible shapes {A.shape} and {x.shape}")
    A = sparse.csr_matrix(A)
    At = A.T.tocsr()

    def backward(g):
        x.accumulate(At @ g)

    return _result(np.asarray(A @ x.values), (x,), backward)


def transpose(a) -> Tensor:
    a = as_tensor(a)

    def backward(g):
        a.accumulate(g.T)

    return _result(a.values.T.copy(), (a,), backward)


def reshape(a, shape: tuple[int, ...]) -> Tensor:
    a = as_tensor(a)
    try:
        values = a.values.reshape(shape)
    except ValueError:
        raise ShapeError(f"reshape: cannot reshape {a.shape} into {shape}") from None

    def backward(g):
        a.accumulate(g.reshape(a.shape))

    return _result(values.copy(), (a,), backward)


def sum(a, axis: int | None = None, keepdims: bool = False) -> Tensor:  # noqa: A001
    a = as_tensor(a)

    def backward(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        a.accumulate(np.broadcast_to(g, a.shape))

    return _result(np.asarray(a.values.sum(axis=axis, keepdims=keepdims)), (a,), backward)


def mean(a, axis: int | None = None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    count = a.values.size if axis is None else a.shape[axis]
    if count == 0:
        raise DomainError("mean over an empty axis")
    return mul(sum(a, axis=axis, keepdims=keepdims), 1.0 / count)


def exp(a) -> Tensor:
    a = as_tensor(a)
    with np.errstate(over="ignore"):
        # overflow surfaces as NumericError from _result
        out_values = np.exp(a.values)

    def backward(g):
        a.accumulate(g * out_values)

    return _result(out_values, (a,), backward)


def log(a) -> Tensor:
    a = as_tensor(a)
    if np.any(a.values <= 0):
        raise DomainError("log of a non-positive value")

    def backward(g):
        a.accumulate(g / a.values)

    return _result(np.log(a.values), (a,), backward)


ACTIVATIONS = ("relu", "elu", "sigmoid", "tanh", "leaky_relu", "identity")


def activate(x, kind: str, slope: float = 0.2) -> Tensor:
    """Elementwise activation.

    ``kind`` is one of ``relu``, ``elu``, ``sigmoid``, ``tanh``,
    ``leaky_relu`` (negative-side ``slope``) or ``identity``. At exactly
    zero the relu and leaky_relu derivatives are 0.
    """
    x = as_tensor(x)
    v = x.values
    if kind == "identity":
        return x
    if kind == "relu":
        out_values = np.where(v > 0, v, 0.0)
        local = (v > 0).astype(np.float64)
    elif kind == "leaky_relu":
        out_values = np.where(v > 0, v, slope * v)
        local = np.where(v > 0, 1.0, np.where(v < 0, slope, 0.0))
    elif kind == "elu":
        neg_part = np.expm1(np.minimum(v, 0.0))
        out_values = np.where(v > 0, v, neg_part)
        local = np.where(v > 0, 1.0, neg_part + 1.0)
    elif kind == "sigmoid":
        out_values = expit(v)
        local = out_values * (1.0 - out_values)
    elif kind == "tanh":
        out_values = np.tanh(v)
        local = 1.0 - out_values**2
    else:
        raise ConfigError(f"unknown activation {kind!r}; expected one of {ACTIVATIONS}")

    def backward(g):
        x.accumulate(g * local)

    return _result(out_values, (x,), backward)


def relu(x) -> Tensor:
    return activate(x, "relu")


def elu(x) -> Tensor:
    return activate(x, "elu")


def sigmoid(x) -> Tensor:
    return activate(x, "sigmoid")


def tanh(x) -> Tensor:
    return activate(x, "tanh")


def leaky_relu(x, slope: float = 0.2) -> Tensor:
    return activate(x, "leaky_relu", slope=slope)


def softmax(x, axis: int = -1) -> Tensor:
    """Numerically stable softmax along ``axis``."""
    x = as_tensor(x)
    if x.values.ndim == 0 or x.shape[axis] == 0:
        raise DomainError("softmax over an empty axis")
    shifted = x.values - x.values.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    out_values = e / e.sum(axis=axis, keepdims=True)

    def backward(g):
        inner = (g * out_values).sum(axis=axis, keepdims=True)
        x.accumulate(out_values * (g - inner))

    return _result(out_values, (x,), backward)


def dropout(x, rate: float, training: bool, rng: np.random.Generator | None = None) -> Tensor:
    """Inverted dropout; the identity when not training or ``rate == 0``."""
    if not 0.0 <= rate < 1.0:
        raise ConfigError(f"dropout rate must lie in [0, 1), got {rate}")
    x = as_tensor(x)
    if not training or rate == 0.0:
        return x
    if rng is None:
        raise ConfigError("dropout in training mode needs an rng")
    mask = (rng.random(x.shape) >= rate) / (1.0 - rate)

    def backward(g):
        x.accumulate(g * mask)

    return _result(x.values * mask, (x,), backward)


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    if not tensors:
        raise DomainError("concat of an empty list")
    try:
        values = np.concatenate([t.values for t in tensors], axis=axis)
    except ValueError as exc:
        raise ShapeError(f"concat: {exc}") from None
    bounds = np.cumsum([0] + [t.shape[axis] for t in tensors])

    def backward(g):
        for t, lo, hi in zip(tensors, bounds[:-1], bounds[1:]):
            if t.requires_grad:
                index = [slice(None)] * g.ndim
                index[axis] = slice(lo, hi)
                t.accumulate(g[tuple(index)])

    return _result(values, tensors, backward)


def gather_rows(x, idx) -> Tensor:
    """Rows ``x[idx]``; repeated indices accumulate gradient."""
    x = as_tensor(x)
    idx = np.asarray(idx, dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= x.shape[0]):
        raise IndexError(f"gather_rows: index out of range for {x.shape[0]} rows")

    def backward(g):
        full = np.zeros_like(x.values)
        np.add.at(full, idx, g)
        x.accumulate(full)

    return _result(x.values[idx], (x,), backward)


def segment_sum(x, segments, n_segments: int) -> Tensor:
    """Sum rows of ``x`` into ``n_segments`` buckets given per-row ids."""
    x = as_tensor(x)
    segments = np.asarray(segments, dtype=np.int64)
    if segments.shape[0] != x.shape[0]:
        raise ShapeError(f"segment_sum: {segments.shape[0]} ids for {x.shape[0]} rows")
    if segments.size and (segments.min() < 0 or segments.max() >= n_segments):
        raise IndexError("segment_sum: segment id out of range")
    out_values = np.zeros((n_segments,) + x.shape[1:])
    np.add.at(out_values, segments, x.values)

    def backward(g):
        x.accumulate(g[segments])

    return _result(out_values, (x,), backward)


def scatter_rows(x, idx, n_rows: int) -> Tensor:
    """Place the rows of ``x`` at positions ``idx`` of an ``n_rows`` zero matrix."""
    x = as_tensor(x)
    idx = np.asarray(idx, dtype=np.int64)
    if len(np.unique(idx)) != idx.size:
        raise ValueError("scatter_rows: indices must be distinct")
    return segment_sum(x, idx, n_rows)


def segment_softmax(logits, segments, n_segments: int) -> Tensor:
    """Softmax of a column of logits within each segment.

    The per-segment maximum is subtracted as a constant; softmax is
    invariant to it, so the gradient is unaffected.
    """
    logits = as_tensor(logits)
    segments = np.asarray(segments, dtype=np.int64)
    seg_max = np.full((n_segments,) + logits.shape[1:], -np.inf)
    np.maximum.at(seg_max, segments, logits.values)
    shifted = sub(logits, seg_max[segments])
    e = exp(shifted)
    denom = segment_sum(e, segments, n_segments)
    return div(e, gather_rows(denom, segments))


def bce_with_logits(logits, targets) -> Tensor:
    """Mean binary cross-entropy of sigmoid(logits) against 0/1 targets."""
    logits = as_tensor(logits)
    y = np.asarray(targets.values if isinstance(targets, Tensor) else targets, dtype=np.float64)
    if y.shape != logits.shape:
        raise ShapeError(f"bce_with_logits: logits {logits.shape} vs targets {y.shape}")
    if logits.values.size == 0:
        raise DomainError("bce_with_logits on an empty batch")
    z = logits.values
    losses = np.maximum(z, 0.0) - z * y + np.log1p(np.exp(-np.abs(z)))
    n = z.size

    def backward(g):
        logits.accumulate(g * (expit(z) - y) / n)

    return _result(np.asarray(losses.mean()), (logits,), backward)


def parameters_finite(params: Iterable[Tensor]) -> bool:
    return all(np.isfinite(p.values).all() for p in params)
