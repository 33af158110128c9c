"""
Ranking from cached embeddings
==============================

The model scores a candidate with a dot product between a user vector and a
news vector, and neither vector depends on the other.  Both can be computed
ahead of time, stored, and combined later with no model in memory.
"""

import tempfile
from pathlib import Path

import numpy as np

from fum import DESK_CONFIG
from fum.cache import EmbeddingCache, rank_from_cache
from fum.metrics import impression_scores
from fum.synthetic import SyntheticSpec, generate_synthetic
from fum.training import run_training

corpus = generate_synthetic(SyntheticSpec(n_users=200, n_news=400, n_train=600, n_valid=50))
bundle = corpus.bundle(k=DESK_CONFIG.k, l=DESK_CONFIG.l)
model = run_training(bundle, DESK_CONFIG.replace(epochs=1), evaluate_each_epoch=False).model

# Offline: one vector per article and one per impression, stored as float32.
news_vectors = model.encode_all_news(bundle.news)
user_vectors = model.encode_impression_users(bundle.news, bundle.valid, news_vectors)
out = Path(tempfile.mkdtemp())
EmbeddingCache(bundle.news.ids, news_vectors[1:]).save(out / "news.cache")
EmbeddingCache([imp.impression_id for imp in bundle.valid], user_vectors).save(out / "users.cache")
print("cache sizes:", (out / "news.cache").stat().st_size, (out / "users.cache").stat().st_size, "bytes")

# %%
# Online: load the two files and sort candidates by score.
ranked = rank_from_cache(EmbeddingCache.load(out / "news.cache"), EmbeddingCache.load(out / "users.cache"), bundle.valid)
for r in ranked[:3]:
    print(r.tsv())

# %%
# The cached scores agree with the full model up to float32 rounding.
direct = impression_scores(model, bundle.news, bundle.valid)
gap = max(
    max(abs(dict(r.ranking)[n] - s) for n, s in zip(imp.candidate_ids, d)) / np.abs(d).max()
    for r, imp, d in zip(ranked, bundle.valid, direct)
)
print("largest relative score difference: %.1e" % gap)
