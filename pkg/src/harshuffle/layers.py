"""Shared neural building blocks on top of the autodiff core."""

from __future__ import annotations

import math

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .rng import Prng


def glorot_uniform(prng: Prng, shape: tuple[int, ...], fan_in: int, fan_out: int) -> np.ndarray:
    """Uniform init in +-sqrt(6 / (fan_in + fan_out))."""
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return (prng.uniform(shape) * 2.0 - 1.0) * limit


class Linear:
    def __init__(self, prng: Prng, n_in: int, n_out: int, bias: bool = True):
        self.w = Tensor(glorot_uniform(prng, (n_in, n_out), n_in, n_out), requires_grad=True)
        self.b = Tensor(np.zeros(n_out), requires_grad=True) if bias else None

    def __call__(self, x: Tensor) -> Tensor:
        y = ad.matmul(x, self.w)
        return ad.add(y, self.b) if self.b is not None else y

    def named(self, prefix: str) -> list[tuple[str, Tensor]]:
        out = [(f"{prefix}.w", self.w)]
        if self.b is not None:
            out.append((f"{prefix}.b", self.b))
        return out


class MultiHeadSelfAttention:
    """Scaled dot-product self-attention; softmax weights are row-stochastic.

    When ``capture`` is a list, the post-softmax weight array
    (batch, heads, L, L) of this call is appended to it.
    """

    def __init__(self, prng: Prng, d_model: int, heads: int):
        if d_model % heads != 0:
            raise ValueError(f"d_model {d_model} not divisible by heads {heads}")
        self.d_model = d_model
        self.heads = heads
        self.head_dim = d_model // heads
        self.q = Linear(prng, d_model, d_model)
        # A key bias shifts every attention row uniformly, so the softmax
        # cancels it exactly; the parameter would be functionless.
        self.k = Linear(prng, d_model, d_model, bias=False)
        self.v = Linear(prng, d_model, d_model)
        self.o = Linear(prng, d_model, d_model)

    def __call__(self, x: Tensor, capture: list | None = None) -> Tensor:
        batch, length, _ = x.shape

        def split(t: Tensor) -> Tensor:
            t = ad.reshape(t, (batch, length, self.heads, self.head_dim))
            return ad.transpose(t, (0, 2, 1, 3))  # (B, H, L, dh)

        # scaling q instead of the L x L score matrix saves a large elementwise pass
        q = split(ad.mul(self.q(x), 1.0 / math.sqrt(self.head_dim)))
        k, v = split(self.k(x)), split(self.v(x))
        weights = ad.softmax(ad.matmul(q, ad.transpose(k, (0, 1, 3, 2))), axis=-1)
        if capture is not None:
            capture.append(weights.data.copy())
        ctx = ad.transpose(ad.matmul(weights, v), (0, 2, 1, 3))
        return self.o(ad.reshape(ctx, (batch, length, self.d_model)))

    def named(self, prefix: str) -> list[tuple[str, Tensor]]:
        out = []
        for name, lin in (("q", self.q), ("k", self.k), ("v", self.v), ("o", self.o)):
            out.extend(lin.named(f"{prefix}.{name}"))
        return out


def dropout(x: Tensor, rate: float, prng: Prng | None, training: bool) -> Tensor:
    """Inverted dropout; identity when not training or rate is 0."""
    if not training or rate == 0.0:
        return x
    if prng is None:
        raise ValueError("training-mode dropout needs a Prng")
    keep = 1.0 - rate
    mask = (np.atleast_1d(prng.uniform(x.shape)) > rate).astype(np.float64) / keep
    return ad.mul(x, mask.reshape(x.shape))


def one_hot(indices: np.ndarray, depth: int) -> np.ndarray:
    out = np.zeros((len(indices), depth))
    out[np.arange(len(indices)), indices] = 1.0
    return out
