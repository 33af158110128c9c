"""News encoder: per-genre transformer + attention pooling, then genre pooling."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from fum import tensor as T
from fum.config import TrainConfig
from fum.data import NewsRecord
from fum.layers import AdditiveAttention, SelfAttentionLayer
from fum.params import ParamStore
from fum.tensor import Tensor


class Embeddings:
    """Shared word table plus one learned offset per genre.

    A genre's embedding layer is the word table shifted by that genre's
    offset, so all genres share one (possibly pretrained) table.
    """

    def __init__(self, store: ParamStore, vocab_size: int, d: int, k: int, word_vectors: np.ndarray | None = None):
        self.words = store.param("embed.words", (vocab_size, d))
        if word_vectors is not None:
            if word_vectors.shape != (vocab_size, d):
                raise ValueError(f"word vectors have shape {word_vectors.shape}, expected {(vocab_size, d)}")
            self.words.data[...] = word_vectors
        self.genre_offset = store.param("embed.genre_offset", (k, d), "zeros")

    def __call__(self, tokens: np.ndarray, genre) -> Tensor:
        """Embed token ids ``(..., l)``; ``genre`` is an int or an id array broadcastable to them."""
        words = T.take_rows(self.words, tokens)
        return words + T.take_rows(self.genre_offset, np.asarray(genre))


@dataclass
class EncodedNews:
    news_id: str
    vector: Tensor


class NewsEncoder:
    def __init__(self, store: ParamStore, cfg: TrainConfig, embed: Embeddings):
        self.k, self.D = cfg.k, cfg.D
        self.embed = embed
        self.text = [SelfAttentionLayer(store, f"news.genre{j}.transformer", cfg.d, cfg.H, cfg.d_h) for j in range(cfg.k)]
        self.token_pool = [
            AdditiveAttention(store, f"news.genre{j}.pool", cfg.D, cfg.d_att, cfg.pool_scoring) for j in range(cfg.k)
        ]
        self.genre_pool = AdditiveAttention(store, "news.genre_pool", cfg.D, cfg.d_att, cfg.pool_scoring)

    def encode_genre(self, tokens: np.ndarray, mask: np.ndarray, genre: int) -> Tensor:
        """Genre text ``(..., l)`` -> ``(..., D)``; all-padding text gives zeros."""
        if not 0 <= genre < self.k:
            raise IndexError(f"genre index {genre} out of range for k={self.k}")
        x = self.embed(tokens, genre)
        h = self.text[genre](x, mask)
        return self.token_pool[genre](h, mask)

    def __call__(self, tokens: np.ndarray, mask: np.ndarray) -> Tensor:
        """Encode articles ``(N, k, l)`` -> ``(N, D)``.

        Genres whose text is entirely padding are masked out of the genre pool.
        """
        per_genre = [self.encode_genre(tokens[..., j, :], mask[..., j, :], j) for j in range(self.k)]
        stacked = T.stack(per_genre, axis=-2)
        return self.genre_pool(stacked, mask.any(axis=-1))


def encode_genre_text(tokens, mask, genre: int, encoder: NewsEncoder) -> Tensor:
    return encoder.encode_genre(np.asarray(tokens), np.asarray(mask, dtype=bool), genre)


def encode_news(article: NewsRecord, encoder: NewsEncoder) -> EncodedNews:
    if article.tokens.shape[0] != encoder.k:
        raise ValueError(f"news {article.news_id!r} has {article.tokens.shape[0]} genres, expected {encoder.k}")
    if not article.mask.any():
        raise ValueError(f"news {article.news_id!r} has no text in any genre")
    vec = encoder(article.tokens[None], article.mask[None])
    return EncodedNews(article.news_id, T.reshape(vec, (encoder.D,)))


def encode_news_batch(articles: Sequence[NewsRecord], encoder: NewsEncoder) -> list[EncodedNews]:
    """Encode many articles at once; results match one-at-a-time encoding."""
    if not articles:
        return []
    for a in articles:
        if a.tokens.shape[0] != encoder.k:
            raise ValueError(f"news {a.news_id!r} has {a.tokens.shape[0]} genres, expected {encoder.k}")
        if not a.mask.any():
            raise ValueError(f"news {a.news_id!r} has no text in any genre")
    # one article per call keeps every reduction identical to encode_news
    return [encode_news(a, encoder) for a in articles]
