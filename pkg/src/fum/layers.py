"""Sequence mixers (Fastformer, multi-head self-attention) and attention pooling.

All layers take a row sequence ``x`` of shape ``(..., n, d_in)`` and a boolean
``mask`` of shape ``(..., n)``.  Leading axes are batch axes.  Rows at masked
positions come out as exact zeros and never influence unmasked rows.

Weights are row-vector convention: a projection ``Wᵀh`` is computed as
``h @ W`` with ``W`` of shape ``(d_in, d_out)``.
"""

from __future__ import annotations

import math
from typing import Protocol

import numpy as np

from fum import tensor as T
from fum.params import ParamStore
from fum.tensor import Tensor


def _row_mask(mask: np.ndarray, dtype) -> np.ndarray:
    return np.asarray(mask, dtype=dtype)[..., None]


class Scorer(Protocol):
    def __call__(self, x: Tensor) -> Tensor: ...

    def flops(self, n: int) -> int: ...


class VectorScorer:
    """Score rows as ``wᵀx / sqrt(d)`` with a learned vector ``w``."""

    def __init__(self, store: ParamStore, name: str, d: int):
        self.d = d
        self.w = store.param(name, (d,), "zeros")
        self.scale = 1.0 / math.sqrt(d)

    def __call__(self, x: Tensor) -> Tensor:
        return T.matmul(x, self.w) * self.scale

    def flops(self, n: int) -> int:
        return n * self.d


class MLPScorer:
    """Score rows as ``v2ᵀ tanh(W1ᵀx + b1)``."""

    def __init__(self, store: ParamStore, prefix: str, d: int, d_att: int):
        self.d, self.d_att = d, d_att
        self.W1 = store.param(f"{prefix}.W1", (d, d_att))
        self.b1 = store.param(f"{prefix}.b1", (d_att,), "zeros")
        self.v2 = store.param(f"{prefix}.v2", (d_att,), "zeros")

    def __call__(self, x: Tensor) -> Tensor:
        return T.matmul(T.tanh(T.matmul(x, self.W1) + self.b1), self.v2)

    def flops(self, n: int) -> int:
        return n * (self.d * self.d_att + self.d_att)


def make_scorer(store: ParamStore, prefix: str, d: int, kind: str, d_att: int) -> Scorer:
    if kind == "vector":
        return VectorScorer(store, f"{prefix}.w", d)
    if kind == "mlp":
        return MLPScorer(store, prefix, d, d_att)
    raise ValueError(f"unknown attention scoring {kind!r}")


class AdditiveAttention:
    """Attention pooling: a softmax-weighted sum of rows.

    With the default ``mlp`` scorer the weights are a masked softmax over
    ``v2ᵀ tanh(W1ᵀxᵢ + b1)``.  Batched calls map a fully masked slice to the
    zero vector; :func:`additive_attention_pool` rejects it instead.
    """

    def __init__(self, store: ParamStore, prefix: str, d_in: int, d_att: int, kind: str = "mlp"):
        if d_att < 1:
            raise ValueError("d_att must be at least 1")
        self.d_in = d_in
        self.scorer = make_scorer(store, prefix, d_in, kind, d_att)

    @property
    def W1(self) -> Tensor:
        return self.scorer.W1

    @property
    def b1(self) -> Tensor:
        return self.scorer.b1

    @property
    def v2(self) -> Tensor:
        return self.scorer.v2

    def weights(self, x: Tensor, mask) -> Tensor:
        return T.softmax_masked(self.scorer(x), mask, allow_empty=True)

    def __call__(self, x: Tensor, mask) -> Tensor:
        if x.shape[-1] != self.d_in:
            raise ValueError(f"pool expects rows of width {self.d_in}, got {x.shape}")
        return T.weighted_sum(self.weights(x, mask), x)

    def flops(self, n: int) -> int:
        # scores, softmax normalization, weighted sum
        return self.scorer.flops(n) + n + n * self.d_in


def additive_attention_pool(x, mask, params: AdditiveAttention) -> Tensor:
    x = T.as_tensor(x)
    if not np.any(mask):
        raise ValueError("attention pooling over an all-masked sequence")
    return params(x, mask)


class SequenceMixer(Protocol):
    d_in: int
    d_out: int

    def mix(self, x: Tensor, mask) -> Tensor: ...

    def flops(self, length: int) -> int: ...


class FastformerHead:
    def __init__(self, store: ParamStore, prefix: str, d_in: int, d_h: int, scoring: str, d_att: int):
        self.d_in, self.d_h = d_in, d_h
        self.Wq = store.param(f"{prefix}.Wq", (d_in, d_h))
        self.Wk = store.param(f"{prefix}.Wk", (d_in, d_h))
        self.Wv = store.param(f"{prefix}.Wv", (d_in, d_h))
        self.Wo = store.param(f"{prefix}.Wo", (d_h, d_h))
        self.alpha = make_scorer(store, f"{prefix}.alpha", d_h, scoring, d_att)
        self.beta = make_scorer(store, f"{prefix}.beta", d_h, scoring, d_att)

    @property
    def w_alpha(self) -> Tensor:
        return self.alpha.w

    @property
    def w_beta(self) -> Tensor:
        return self.beta.w

    def __call__(self, x: Tensor, mask, residual: bool) -> Tensor:
        q_i = T.matmul(x, self.Wq)
        q = T.weighted_sum(T.softmax_masked(self.alpha(q_i), mask, allow_empty=True), q_i)
        k_i = T.matmul(x, self.Wk)
        p_i = T.expand_dims(q, -2) * k_i
        k = T.weighted_sum(T.softmax_masked(self.beta(p_i), mask, allow_empty=True), p_i)
        v_i = T.matmul(x, self.Wv)
        out = T.matmul(T.expand_dims(k, -2) * v_i, self.Wo)
        if residual:
            out = out + q_i
        return out

    def flops(self, n: int, residual: bool) -> int:
        d_in, d_h = self.d_in, self.d_h
        proj = 3 * n * d_in * d_h
        pools = self.alpha.flops(n) + self.beta.flops(n) + 2 * n + 2 * n * d_h
        products = 2 * n * d_h  # q * k_i and k * v_i
        out = n * d_h * d_h
        return proj + pools + products + out + (n * d_h if residual else 0)


class FastformerLayer:
    """Fastformer mixer: H additive-attention heads concatenated feature-wise.

    Per head the sequence is summarized into a global query ``q``, each key is
    modulated by it and pooled into a global key ``k``, and every value is
    rescaled by ``k`` before the output projection.  Cost is linear in length.
    """

    def __init__(
        self,
        store: ParamStore,
        prefix: str,
        d_in: int,
        heads: int,
        d_h: int,
        scoring: str = "vector",
        d_att: int = 32,
        residual: bool = False,
    ):
        if heads < 1:
            raise ValueError("need at least one head")
        self.d_in, self.d_h, self.residual = d_in, d_h, residual
        self.d_out = heads * d_h
        self.heads = [
            FastformerHead(store, f"{prefix}.head{h}", d_in, d_h, scoring, d_att) for h in range(heads)
        ]

    def mix(self, x: Tensor, mask) -> Tensor:
        if x.shape[-1] != self.d_in:
            raise ValueError(f"fastformer expects width {self.d_in}, got {x.shape}")
        out = T.concat([h(x, mask, self.residual) for h in self.heads], axis=-1)
        return out * _row_mask(mask, x.dtype)

    __call__ = mix

    def flops(self, length: int) -> int:
        # trailing mask multiply on the concatenated output
        return sum(h.flops(length, self.residual) for h in self.heads) + length * self.d_out


class SelfAttentionLayer:
    """Multi-head scaled dot-product self-attention with an output projection."""

    def __init__(self, store: ParamStore, prefix: str, d_in: int, heads: int, d_h: int):
        self.d_in, self.d_h, self.n_heads = d_in, d_h, heads
        self.d_out = heads * d_h
        self.Wq = [store.param(f"{prefix}.head{h}.Wq", (d_in, d_h)) for h in range(heads)]
        self.Wk = [store.param(f"{prefix}.head{h}.Wk", (d_in, d_h)) for h in range(heads)]
        self.Wv = [store.param(f"{prefix}.head{h}.Wv", (d_in, d_h)) for h in range(heads)]
        self.Wo = store.param(f"{prefix}.Wo", (self.d_out, self.d_out))
        self.scale = 1.0 / math.sqrt(d_h)

    def mix(self, x: Tensor, mask) -> Tensor:
        if x.shape[-1] != self.d_in:
            raise ValueError(f"self-attention expects width {self.d_in}, got {x.shape}")
        col_mask = np.asarray(mask, dtype=bool)[..., None, :]
        outs = []
        for Wq, Wk, Wv in zip(self.Wq, self.Wk, self.Wv):
            q, k, v = T.matmul(x, Wq), T.matmul(x, Wk), T.matmul(x, Wv)
            scores = T.matmul(q, T.swapaxes(k)) * self.scale
            attn = T.softmax_masked(scores, col_mask, allow_empty=True)
            outs.append(T.matmul(attn, v))
        out = T.matmul(T.concat(outs, axis=-1), self.Wo)
        return out * _row_mask(mask, x.dtype)

    __call__ = mix

    def flops(self, length: int) -> int:
        n, D = length, self.d_out
        per_head = 3 * n * self.d_in * self.d_h + n * n * self.d_h + n * n + n * n * self.d_h
        return self.n_heads * per_head + n * D * D + n * D


def fastformer_layer_forward(h_in, mask, params: FastformerLayer) -> Tensor:
    if not np.any(mask):
        raise ValueError("fastformer over an all-masked sequence")
    return params.mix(T.as_tensor(h_in), mask)


def self_attention_layer_forward(x, mask, params: SelfAttentionLayer) -> Tensor:
    if not np.any(mask):
        raise ValueError("self-attention over an all-masked sequence")
    return params.mix(T.as_tensor(x), mask)


def flop_count(mixer: SequenceMixer, length: int) -> int:
    """Multiply-accumulate count of one forward pass over ``length`` rows."""
    if length < 1:
        raise ValueError("length must be at least 1")
    return mixer.flops(length)
