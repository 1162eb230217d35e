"""Reverse-mode gradients over dense float64 arrays.

A :class:`Tensor` wraps a numpy array. While a :class:`Tape` is active
(``with Tape() as tape:``), every operation whose inputs require
gradients appends a node (parents + gradient rule) in construction
order; :meth:`Tape.gradients` replays the node list once, in reverse,
which is a valid topological order because an output always exists
before anything consumes it. With no active tape the same functions run
as plain numpy, which is the inference path.

Set ``CHECK_FINITE = True`` to assert that every forward result is
finite (debug aid; off by default).
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

CHECK_FINITE = False

_TAPE_STACK: list["Tape"] = []


class ShapeError(ValueError):
    """Operand shapes incompatible for the requested operation."""


class AutodiffError(RuntimeError):
    """Misuse of the tape (non-scalar loss, parameter not on tape, ...)."""


class Tensor:
    __slots__ = ("data", "requires_grad")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = bool(requires_grad)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        return float(self.data)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)


class Tape:
    """Recorded operation nodes; each is visited exactly once on replay."""

    def __init__(self):
        self._nodes: list[tuple[Tensor, tuple[Tensor, ...], Callable]] = []

    def __enter__(self) -> "Tape":
        _TAPE_STACK.append(self)
        return self

    def __exit__(self, *exc) -> None:
        _TAPE_STACK.pop()

    def __len__(self) -> int:
        return len(self._nodes)

    def _record(self, out: Tensor, parents: tuple[Tensor, ...], grad_fn: Callable) -> None:
        self._nodes.append((out, parents, grad_fn))

    def gradients(self, loss: Tensor, params: Sequence[Tensor]) -> list[np.ndarray]:
        """Gradient of a scalar ``loss`` w.r.t. each tensor in ``params``."""
        if loss.size != 1:
            raise AutodiffError(f"loss must be scalar, got shape {loss.shape}")
        on_tape: set[int] = set()
        for _, parents, _ in self._nodes:
            for p in parents:
                on_tape.add(id(p))
        for i, p in enumerate(params):
            if id(p) not in on_tape:
                raise AutodiffError(f"parameter {i} is not on the tape")

        grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
        for out, parents, grad_fn in reversed(self._nodes):
            g = grads.pop(id(out), None)
            if g is None:
                continue
            for p, pg in zip(parents, grad_fn(g)):
                if pg is None or not p.requires_grad:
                    continue
                acc = grads.get(id(p))
                grads[id(p)] = pg if acc is None else acc + pg
        return [grads.get(id(p), np.zeros_like(p.data)) for p in params]


def backward(loss: Tensor, tape: Tape, params: Sequence[Tensor]) -> list[np.ndarray]:
    """Reverse accumulation of ``loss`` over ``tape``; see Tape.gradients."""
    return tape.gradients(loss, params)


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _make(data: np.ndarray, parents: tuple[Tensor, ...], grad_fn: Callable) -> Tensor:
    if CHECK_FINITE and not np.all(np.isfinite(data)):
        raise FloatingPointError("non-finite value in forward result")
    rg = any(p.requires_grad for p in parents)
    out = Tensor(data, requires_grad=rg and bool(_TAPE_STACK))
    if out.requires_grad:
        _TAPE_STACK[-1]._record(out, parents, grad_fn)
    return out


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum ``grad`` down to ``shape`` (inverse of numpy broadcasting)."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


def stop_gradient(t: Tensor) -> Tensor:
    return Tensor(t.data)


# ---------------------------------------------------------------------------
# arithmetic
#
# Gradient rules skip parents created without requires_grad (captured at
# build time), so constants never pay for reductions.


def add(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    na, nb = a.requires_grad, b.requires_grad
    return _make(
        a.data + b.data,
        (a, b),
        lambda g: (
            _unbroadcast(g, a.shape) if na else None,
            _unbroadcast(g, b.shape) if nb else None,
        ),
    )


def sub(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    na, nb = a.requires_grad, b.requires_grad
    return _make(
        a.data - b.data,
        (a, b),
        lambda g: (
            _unbroadcast(g, a.shape) if na else None,
            _unbroadcast(-g, b.shape) if nb else None,
        ),
    )


def mul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    na, nb = a.requires_grad, b.requires_grad
    return _make(
        a.data * b.data,
        (a, b),
        lambda g: (
            _unbroadcast(g * b.data, a.shape) if na else None,
            _unbroadcast(g * a.data, b.shape) if nb else None,
        ),
    )


def div(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    na, nb = a.requires_grad, b.requires_grad
    return _make(
        a.data / b.data,
        (a, b),
        lambda g: (
            _unbroadcast(g / b.data, a.shape) if na else None,
            _unbroadcast(-g * a.data / (b.data * b.data), b.shape) if nb else None,
        ),
    )


def neg(a) -> Tensor:
    a = _as_tensor(a)
    return _make(-a.data, (a,), lambda g: (-g,))


def matmul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise ShapeError(f"matmul shapes incompatible: {a.shape} @ {b.shape}")
    na, nb = a.requires_grad, b.requires_grad

    def grad_fn(g):
        ga = _unbroadcast(g @ np.swapaxes(b.data, -1, -2), a.shape) if na else None
        gb = _unbroadcast(np.swapaxes(a.data, -1, -2) @ g, b.shape) if nb else None
        return ga, gb

    return _make(a.data @ b.data, (a, b), grad_fn)


def powc(a, c: float) -> Tensor:
    """Elementwise ``a ** c`` for a real constant exponent."""
    a = _as_tensor(a)
    out = a.data**c
    return _make(out, (a,), lambda g: (g * c * a.data ** (c - 1.0),))


def exp(a) -> Tensor:
    a = _as_tensor(a)
    out = np.exp(a.data)
    return _make(out, (a,), lambda g: (g * out,))


def log(a) -> Tensor:
    a = _as_tensor(a)
    return _make(np.log(a.data), (a,), lambda g: (g / a.data,))


def relu(a) -> Tensor:
    a = _as_tensor(a)
    mask = a.data > 0.0
    return _make(a.data * mask, (a,), lambda g: (g * mask,))


# ---------------------------------------------------------------------------
# shape manipulation


def reshape(a, shape: tuple[int, ...]) -> Tensor:
    a = _as_tensor(a)
    return _make(a.data.reshape(shape), (a,), lambda g: (g.reshape(a.shape),))


def transpose(a, axes: tuple[int, ...]) -> Tensor:
    a = _as_tensor(a)
    inverse = tuple(int(i) for i in np.argsort(axes))
    return _make(a.data.transpose(axes), (a,), lambda g: (g.transpose(inverse),))


def broadcast_to(a, shape: tuple[int, ...]) -> Tensor:
    a = _as_tensor(a)
    return _make(
        np.broadcast_to(a.data, shape).copy(), (a,), lambda g: (_unbroadcast(g, a.shape),)
    )


def concat(parts: Sequence, axis: int) -> Tensor:
    parts = [_as_tensor(p) for p in parts]
    sizes = [p.shape[axis] for p in parts]
    offsets = np.cumsum([0] + sizes)

    def grad_fn(g):
        out = []
        for p, lo, hi in zip(parts, offsets[:-1], offsets[1:]):
            if not p.requires_grad:
                out.append(None)
                continue
            key = [slice(None)] * g.ndim
            key[axis] = slice(lo, hi)
            out.append(g[tuple(key)])
        return tuple(out)

    return _make(np.concatenate([p.data for p in parts], axis=axis), tuple(parts), grad_fn)


def take_slice(a, key) -> Tensor:
    """Basic (non-repeating) indexing; gradient scatters back to zeros."""
    a = _as_tensor(a)

    def grad_fn(g):
        full = np.zeros_like(a.data)
        full[key] = g
        return (full,)

    return _make(a.data[key], (a,), grad_fn)


def gather_rows(a, idx: np.ndarray) -> Tensor:
    """Pick ``a[i, idx[i]]`` for each row i of a 2-d tensor."""
    a = _as_tensor(a)
    if a.ndim != 2:
        raise ShapeError(f"gather_rows expects 2-d input, got {a.shape}")
    rows = np.arange(a.shape[0])

    def grad_fn(g):
        full = np.zeros_like(a.data)
        full[rows, idx] = g
        return (full,)

    return _make(a.data[rows, idx], (a,), grad_fn)


# ---------------------------------------------------------------------------
# reductions


def tsum(a, axis=None, keepdims: bool = False) -> Tensor:
    a = _as_tensor(a)

    def grad_fn(g):
        if axis is None:
            return (np.broadcast_to(g, a.shape).copy(),)
        if not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, a.shape).copy(),)

    return _make(a.data.sum(axis=axis, keepdims=keepdims), (a,), grad_fn)


def tmean(a, axis=None, keepdims: bool = False) -> Tensor:
    a = _as_tensor(a)
    count = a.size if axis is None else np.prod([a.shape[i] for i in np.atleast_1d(axis)])

    def grad_fn(g):
        if axis is None:
            return (np.broadcast_to(g / count, a.shape).copy(),)
        if not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g / count, a.shape).copy(),)

    return _make(a.data.mean(axis=axis, keepdims=keepdims), (a,), grad_fn)


# ---------------------------------------------------------------------------
# neural-net specific


def softmax(a, axis: int = -1) -> Tensor:
    """Row-wise softmax with max subtraction for overflow safety."""
    a = _as_tensor(a)
    out = a.data - a.data.max(axis=axis, keepdims=True)
    np.exp(out, out=out)
    out /= out.sum(axis=axis, keepdims=True)

    def grad_fn(g):
        tmp = g * out
        inner = tmp.sum(axis=axis, keepdims=True)
        np.subtract(g, inner, out=tmp)
        tmp *= out
        return (tmp,)

    return _make(out, (a,), grad_fn)


def log_softmax(a, axis: int = -1) -> Tensor:
    a = _as_tensor(a)
    m = a.data.max(axis=axis, keepdims=True)
    shifted = sub(a, m)
    return sub(shifted, log(tsum(exp(shifted), axis=axis, keepdims=True)))


def layer_norm(a, eps: float = 1e-5) -> Tensor:
    """Normalise each trailing feature vector to zero mean, unit variance."""
    mu = tmean(a, axis=-1, keepdims=True)
    centered = sub(a, mu)
    var = tmean(mul(centered, centered), axis=-1, keepdims=True)
    return mul(centered, powc(add(var, eps), -0.5))


def cross_entropy(logits, labels: np.ndarray) -> Tensor:
    """Mean negative log-likelihood of integer ``labels`` under ``logits``."""
    picked = gather_rows(log_softmax(logits, axis=-1), np.asarray(labels))
    return neg(tmean(picked))


# ---------------------------------------------------------------------------
# verification


def grad_check(
    f: Callable[[], Tensor],
    params: Sequence[Tensor],
    eps: float = 1e-5,
    stride: int = 1,
) -> float:
    """Max relative error between tape gradients and central differences.

    ``f`` must rebuild the scalar loss from ``params`` on every call and
    be deterministic (freeze any sampling). Relative error divides by
    ``max(1e-8, |analytic| + |numeric|)``. ``stride`` probes every
    stride-th entry of each parameter.
    """
    with Tape() as tape:
        analytic = tape.gradients(f(), params)
    worst = 0.0
    for p, ag in zip(params, analytic):
        flat = p.data.reshape(-1)
        aflat = ag.reshape(-1)
        for i in range(0, flat.size, stride):
            orig = flat[i]
            flat[i] = orig + eps
            hi = float(f().data)
            flat[i] = orig - eps
            lo = float(f().data)
            flat[i] = orig
            numeric = (hi - lo) / (2.0 * eps)
            denom = max(1e-8, abs(aflat[i]) + abs(numeric))
            worst = max(worst, abs(aflat[i] - numeric) / denom)
    return worst
