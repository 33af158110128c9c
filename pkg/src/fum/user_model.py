"""User modeling: fine-grained (behavior document) and coarse-grained (news level)."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from fum import tensor as T
from fum.config import TrainConfig
from fum.data import NewsRecord
from fum.layers import AdditiveAttention, FastformerLayer, SelfAttentionLayer
from fum.news_encoder import Embeddings, NewsEncoder
from fum.params import ParamStore
from fum.tensor import Tensor


@dataclass
class BehaviorSequence:
    """The concatenated clicked-news document of one or more users.

    ``embeddings`` is ``(..., L, g)`` with ``L = m*k*l``; each token row is its
    word embedding, genre embedding and position embedding concatenated.
    """

    embeddings: Tensor
    mask: np.ndarray
    m: int
    k: int
    l: int

    @property
    def news_boundaries(self) -> list[range]:
        w = self.k * self.l
        return [range(i * w, (i + 1) * w) for i in range(self.m)]


@dataclass
class UserEmbedding:
    u_fine: Tensor
    u_coarse: Tensor
    u: Tensor


class FineUserModel:
    """Fastformer over the behavior document, then news-level and user-level pooling."""

    def __init__(self, store: ParamStore, cfg: TrainConfig, embed: Embeddings):
        self.m, self.k, self.l = cfg.m, cfg.k, cfg.l
        self.D = cfg.D
        self.embed = embed
        self.genre_table = store.param("fine.genre", (cfg.k, cfg.d_genre)) if cfg.d_genre else None
        self.pos_table = store.param("fine.position", (cfg.L, cfg.d_pos)) if cfg.d_pos else None
        self.layers = []
        d_in = cfg.g
        for i in range(cfg.fastformer_layers):
            self.layers.append(
                FastformerLayer(
                    store,
                    f"fine.fastformer.{i}",
                    d_in,
                    cfg.H,
                    cfg.d_h,
                    scoring=cfg.fastformer_scoring,
                    d_att=cfg.d_att,
                    residual=cfg.fastformer_residual,
                )
            )
            d_in = cfg.D
        self.news_pool = AdditiveAttention(store, "fine.news_pool", cfg.D, cfg.d_att, cfg.pool_scoring)
        self.user_pool = AdditiveAttention(store, "fine.user_pool", cfg.D, cfg.d_att, cfg.pool_scoring)

    def behavior_sequence(self, tokens: np.ndarray, mask: np.ndarray) -> BehaviorSequence:
        """Lay out clicked-news tokens ``(..., m, k, l)`` as one document."""
        lead = tokens.shape[:-3]
        L = self.m * self.k * self.l
        flat_tokens = tokens.reshape(lead + (L,))
        flat_mask = mask.reshape(lead + (L,))
        genre_ids = np.broadcast_to(np.repeat(np.arange(self.k), self.l), (self.m, self.k * self.l)).reshape(L)
        parts = [self.embed(flat_tokens, genre_ids)]
        if self.genre_table is not None:
            parts.append(_tile(T.take_rows(self.genre_table, genre_ids), lead))
        if self.pos_table is not None:
            parts.append(_tile(self.pos_table, lead))
        return BehaviorSequence(T.concat(parts, axis=-1), flat_mask, self.m, self.k, self.l)

    def __call__(self, seq: BehaviorSequence) -> Tensor:
        h = seq.embeddings
        for layer in self.layers:
            h = layer(h, seq.mask)
        lead = h.shape[:-2]
        w = self.k * self.l
        per_news = T.reshape(h, lead + (self.m, w, self.D))
        news_mask = seq.mask.reshape(lead + (self.m, w))
        f = self.news_pool(per_news, news_mask)
        return self.user_pool(f, news_mask.any(axis=-1))


def _tile(t: Tensor, lead: tuple[int, ...]) -> Tensor:
    if not lead:
        return t
    ones = np.ones(lead + (1, 1), dtype=t.dtype)
    return t * ones


class CoarseUserModel:
    """Self-attention across clicked-news vectors, then attention pooling."""

    def __init__(self, store: ParamStore, cfg: TrainConfig):
        self.attn = SelfAttentionLayer(store, "coarse.transformer", cfg.D, cfg.H, cfg.d_h)
        self.pool = AdditiveAttention(store, "coarse.user_pool", cfg.D, cfg.d_att, cfg.pool_scoring)

    def __call__(self, news_vectors: Tensor, news_mask: np.ndarray) -> Tensor:
        c = self.attn(news_vectors, news_mask)
        return self.pool(c, news_mask)


def stack_history(history: Sequence[NewsRecord], m: int, k: int, l: int) -> tuple[np.ndarray, np.ndarray]:
    """Token and mask arrays ``(m, k, l)`` for up to ``m`` clicked news, padded at the end."""
    if len(history) > m:
        raise ValueError(f"history of {len(history)} news exceeds m={m}")
    tokens = np.zeros((m, k, l), dtype=np.int64)
    mask = np.zeros((m, k, l), dtype=bool)
    for i, rec in enumerate(history):
        if rec.tokens.shape != (k, l):
            raise ValueError(f"news {rec.news_id!r} has shape {rec.tokens.shape}, expected {(k, l)}")
        tokens[i], mask[i] = rec.tokens, rec.mask
    return tokens, mask


def build_behavior_sequence(history: Sequence[NewsRecord], fine: FineUserModel) -> BehaviorSequence:
    tokens, mask = stack_history(history, fine.m, fine.k, fine.l)
    return fine.behavior_sequence(tokens, mask)


def fine_user_encode(seq: BehaviorSequence, fine: FineUserModel) -> Tensor:
    return fine(seq)


def coarse_user_encode(history_embeddings, news_mask, coarse: CoarseUserModel) -> Tensor:
    return coarse(T.as_tensor(history_embeddings), np.asarray(news_mask, dtype=bool))


def encode_user(
    history: Sequence[NewsRecord],
    fine: FineUserModel,
    coarse: CoarseUserModel,
    news_enc: NewsEncoder,
    ablation: str = "full",
) -> UserEmbedding:
    """Fused user embedding ``u = u_fine + u_coarse``; ablations zero one side."""
    D = news_enc.D
    zero = T.Tensor(np.zeros(D, dtype=fine.embed.words.dtype))
    if ablation == "coarse_only":
        u_fine = zero
    else:
        u_fine = fine_user_encode(build_behavior_sequence(history, fine), fine)
    if ablation == "fine_only":
        u_coarse = zero
    else:
        tokens, mask = stack_history(history, fine.m, fine.k, fine.l)
        vectors = news_enc(tokens, mask)
        u_coarse = coarse_user_encode(vectors, mask.any(axis=(-1, -2)), coarse)
    return UserEmbedding(u_fine, u_coarse, u_fine + u_coarse)
