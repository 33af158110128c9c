"""Offline embedding cache and cache-only ranking.

File layout (little-endian)::

    b"FUMCACHE1"  u32 dimension  u64 count
    count * (u16 id length, utf-8 id, dimension * f32)

News caches are keyed by news id.  User caches are keyed by impression id,
because a user's embedding depends on the history seen at that impression.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from fum.data import Impression

MAGIC = b"FUMCACHE1"


class CacheError(ValueError):
    pass


class EmbeddingCache:
    def __init__(self, ids: Sequence[str], vectors: np.ndarray):
        vectors = np.asarray(vectors)
        if vectors.ndim != 2 or vectors.shape[0] != len(ids):
            raise ValueError(f"{len(ids)} ids for vectors of shape {vectors.shape}")
        self.ids = list(ids)
        self.index = {k: i for i, k in enumerate(self.ids)}
        if len(self.index) != len(self.ids):
            raise ValueError("duplicate cache ids")
        self.vectors = vectors.astype("<f4")

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return len(self.ids)

    def __contains__(self, key: str) -> bool:
        return key in self.index

    def __getitem__(self, key: str) -> np.ndarray:
        try:
            return self.vectors[self.index[key]]
        except KeyError:
            raise KeyError(f"id {key!r} not in cache") from None

    def dumps(self) -> bytes:
        out = [MAGIC, struct.pack("<IQ", self.dim, len(self.ids))]
        for key, vec in zip(self.ids, self.vectors):
            raw = key.encode("utf-8")
            out.append(struct.pack("<H", len(raw)))
            out.append(raw)
            out.append(vec.tobytes())
        return b"".join(out)

    @classmethod
    def loads(cls, buf: bytes) -> "EmbeddingCache":
        if buf[: len(MAGIC)] != MAGIC:
            raise CacheError("bad cache magic at byte 0")
        pos = len(MAGIC)
        if len(buf) < pos + 12:
            raise CacheError(f"truncated cache header at byte {pos}")
        dim, count = struct.unpack_from("<IQ", buf, pos)
        pos += 12
        ids, rows = [], []
        for _ in range(count):
            if len(buf) < pos + 2:
                raise CacheError(f"truncated cache record at byte {pos}")
            (n,) = struct.unpack_from("<H", buf, pos)
            pos += 2
            end = pos + n + 4 * dim
            if len(buf) < end:
                raise CacheError(f"truncated cache record at byte {pos}")
            ids.append(buf[pos : pos + n].decode("utf-8"))
            rows.append(np.frombuffer(buf, dtype="<f4", count=dim, offset=pos + n))
            pos = end
        if pos != len(buf):
            raise CacheError(f"trailing bytes after cache at byte {pos}")
        vectors = np.stack(rows) if rows else np.zeros((0, dim), dtype="<f4")
        return cls(ids, vectors)

    def save(self, path) -> None:
        Path(path).write_bytes(self.dumps())

    @classmethod
    def load(cls, path) -> "EmbeddingCache":
        return cls.loads(Path(path).read_bytes())


@dataclass
class RankedImpression:
    impression_id: str
    ranking: list[tuple[str, float]]

    def tsv(self) -> str:
        return self.impression_id + "\t" + " ".join(n for n, _ in self.ranking)


def rank_candidates(candidate_ids: Sequence[str], scores: np.ndarray) -> list[tuple[str, float]]:
    order = np.argsort(-np.asarray(scores), kind="stable")
    return [(candidate_ids[i], float(scores[i])) for i in order]


def rank_from_cache(news_cache: EmbeddingCache, user_cache: EmbeddingCache, impressions: Sequence[Impression]) -> list[RankedImpression]:
    """Rank each impression's candidates by cached dot product, descending, stable ties."""
    out = []
    for imp in impressions:
        if imp.impression_id not in user_cache:
            raise KeyError(f"impression {imp.impression_id!r} missing from user cache")
        u = user_cache[imp.impression_id].astype(np.float64)
        ids = imp.candidate_ids
        for n in ids:
            if n not in news_cache:
                raise KeyError(f"news {n!r} missing from news cache")
        cand = np.stack([news_cache[n] for n in ids]).astype(np.float64)
        out.append(RankedImpression(imp.impression_id, rank_candidates(ids, cand @ u)))
    return out
