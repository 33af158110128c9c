"""The full recommender: news encoder, fine and coarse user models, dot-product scoring."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from fum import tensor as T
from fum.config import TrainConfig
from fum.data import Impression, NewsTable
from fum.news_encoder import Embeddings, NewsEncoder
from fum.params import ParamStore
from fum.tensor import Tensor
from fum.user_model import BehaviorSequence, CoarseUserModel, FineUserModel


@dataclass
class UserBatch:
    """Clicked-news rows of a batch of users into a :class:`NewsTable`."""

    rows: np.ndarray  # (B, m) int, 0 = empty slot
    mask: np.ndarray  # (B, m) bool


def user_batch(news: NewsTable, histories, m: int) -> UserBatch:
    pairs = [news.history_rows(h, m) for h in histories]
    return UserBatch(np.stack([p[0] for p in pairs]), np.stack([p[1] for p in pairs]))


class FUM:
    """Fine- and coarse-grained user model over a shared news encoder.

    Parameters live in one :class:`ParamStore`; passing an existing store
    (e.g. from a checkpoint) reuses its tensors instead of initializing.
    """

    def __init__(
        self,
        config: TrainConfig,
        vocab_size: int,
        store: ParamStore | None = None,
        word_vectors: np.ndarray | None = None,
        dtype=np.float64,
    ):
        self.config = config
        self.store = store if store is not None else ParamStore(config.seed, dtype)
        self.embed = Embeddings(self.store, vocab_size, config.d, config.k, word_vectors)
        self.news_encoder = NewsEncoder(self.store, config, self.embed)
        self.fine = FineUserModel(self.store, config, self.embed)
        self.coarse = CoarseUserModel(self.store, config)

    @property
    def D(self) -> int:
        return self.config.D

    def encode_news(self, tokens: np.ndarray, mask: np.ndarray) -> Tensor:
        return self.news_encoder(tokens, mask)

    def user_vectors(self, news: NewsTable, batch: UserBatch, news_vectors: Tensor | None = None, rows=None):
        """Return ``(u_fine, u_coarse)`` for a batch, each ``(B, D)``.

        ``news_vectors`` optionally holds precomputed encodings of the table
        rows listed in ``rows`` (all rows when ``rows`` is None).
        """
        B = batch.rows.shape[0]
        ablation = self.config.ablation
        dtype = self.store.dtype
        zero = Tensor(np.zeros((B, self.D), dtype=dtype))
        if ablation == "coarse_only":
            u_fine = zero
        else:
            seq = self.fine.behavior_sequence(news.tokens[batch.rows], news.mask[batch.rows])
            u_fine = self.fine(seq)
        if ablation == "fine_only":
            u_coarse = zero
        else:
            if news_vectors is None:
                flat = batch.rows.reshape(-1)
                hist = self.encode_news(news.tokens[flat], news.mask[flat])
                hist = T.reshape(hist, (B, batch.rows.shape[1], self.D))
            else:
                lookup = batch.rows if rows is None else np.searchsorted(rows, batch.rows)
                hist = T.take_rows(news_vectors, lookup)
            u_coarse = self.coarse(hist, batch.mask)
        return u_fine, u_coarse

    def user_embedding(self, news: NewsTable, batch: UserBatch, news_vectors=None, rows=None) -> Tensor:
        u_fine, u_coarse = self.user_vectors(news, batch, news_vectors, rows)
        return u_fine + u_coarse

    def behavior_sequence(self, news: NewsTable, batch: UserBatch) -> BehaviorSequence:
        return self.fine.behavior_sequence(news.tokens[batch.rows], news.mask[batch.rows])

    def candidate_scores(self, news: NewsTable, batch: UserBatch, candidates: np.ndarray) -> Tensor:
        """Scores ``(B, C)`` of candidate rows ``(B, C)`` for each user."""
        rows = np.unique(np.concatenate([batch.rows.reshape(-1), candidates.reshape(-1)]))
        vecs = self.encode_news(news.tokens[rows], news.mask[rows])
        u = self.user_embedding(news, batch, vecs, rows)
        cand = T.take_rows(vecs, np.searchsorted(rows, candidates))
        return T.tsum(T.expand_dims(u, -2) * cand, axis=-1)

    # inference helpers over frozen parameters

    def encode_all_news(self, news: NewsTable, chunk: int = 512) -> np.ndarray:
        """Vectors for every table row (row 0, the padding row, is zero)."""
        out = np.zeros((len(news) + 1, self.D), dtype=self.store.dtype)
        for start in range(1, len(news) + 1, chunk):
            idx = np.arange(start, min(start + chunk, len(news) + 1))
            out[idx] = self.encode_news(news.tokens[idx], news.mask[idx]).data
        return out

    def encode_impression_users(self, news: NewsTable, impressions: list[Impression], news_vectors: np.ndarray, chunk: int = 64) -> np.ndarray:
        out = np.zeros((len(impressions), self.D), dtype=self.store.dtype)
        table = Tensor(news_vectors)
        for start in range(0, len(impressions), chunk):
            part = impressions[start : start + chunk]
            batch = user_batch(news, [imp.history for imp in part], self.config.m)
            out[start : start + len(part)] = self.user_embedding(news, batch, table).data
        return out


def score(u, n) -> float:
    """Inner-product matching score of a user and a news vector."""
    u = np.asarray(u.data if isinstance(u, Tensor) else u).reshape(-1)
    n = np.asarray(n.data if isinstance(n, Tensor) else n).reshape(-1)
    if u.shape != n.shape:
        raise ValueError(f"score dimension mismatch: {u.shape} vs {n.shape}")
    return float(u @ n)
