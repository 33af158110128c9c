import numpy as np
import pytest

from fum.bench import BENCH_HEADER, bench_mixers, measure_scaling
from fum.cache import CacheError, EmbeddingCache, rank_candidates, rank_from_cache
from fum.config import TrainConfig
from fum.metrics import impression_scores
from fum.model import FUM
from fum.synthetic import SyntheticSpec, generate_synthetic

CFG = TrainConfig(m=4, k=1, l=8, d=8, d_genre=2, d_pos=2, H=2, d_h=4, d_att=6)


def cached_pipeline(n_valid=100, seed=0):
    """A random model, its news/user caches and end-to-end scores on ``n_valid`` impressions."""
    corpus = generate_synthetic(SyntheticSpec(n_users=60, n_news=150, n_train=10, n_valid=n_valid, seed=seed))
    bundle = corpus.bundle(k=CFG.k, l=CFG.l)
    model = FUM(CFG.replace(seed=seed), len(bundle.vocab))
    model.store.randomize(0.5, seed)
    vectors = model.encode_all_news(bundle.news)
    users = model.encode_impression_users(bundle.news, bundle.valid, vectors)
    news_cache = EmbeddingCache.loads(EmbeddingCache(bundle.news.ids, vectors[1:]).dumps())
    user_cache = EmbeddingCache.loads(EmbeddingCache([i.impression_id for i in bundle.valid], users).dumps())
    direct = impression_scores(model, bundle.news, bundle.valid)
    return bundle, news_cache, user_cache, direct


def cache_agreement(bundle, news_cache, user_cache, direct):
    """(orderings identical, worst relative score deviation)."""
    ranked = rank_from_cache(news_cache, user_cache, bundle.valid)
    same, worst = True, 0.0
    for imp, r, s in zip(bundle.valid, ranked, direct):
        expected = rank_candidates(imp.candidate_ids, s)
        same &= [n for n, _ in r.ranking] == [n for n, _ in expected]
        got = dict(r.ranking)
        scale = max(np.abs(s).max(), 1e-30)
        worst = max(worst, max(abs(got[n] - v) for n, v in zip(imp.candidate_ids, s)) / scale)
    return same, worst


def test_cache_roundtrip(tmp_path):
    vecs = np.arange(6, dtype=np.float64).reshape(3, 2) / 7
    c = EmbeddingCache(["a", "bé", "c"], vecs)
    c.save(tmp_path / "x.cache")
    back = EmbeddingCache.load(tmp_path / "x.cache")
    assert len(back) == 3 and back.dim == 2 and "bé" in back
    np.testing.assert_array_equal(back["c"], vecs[2].astype(np.float32))
    assert back.dumps() == c.dumps()


def test_cache_errors():
    buf = EmbeddingCache(["a"], np.ones((1, 4))).dumps()
    with pytest.raises(CacheError, match="byte"):
        EmbeddingCache.loads(buf[:-1])
    with pytest.raises(CacheError):
        EmbeddingCache.loads(b"NOTACACHE" + buf[9:])
    with pytest.raises(CacheError):
        EmbeddingCache.loads(buf + b"\0")
    with pytest.raises(KeyError):
        EmbeddingCache(["a"], np.ones((1, 4)))["b"]


def test_rank_candidates_stable():
    assert rank_candidates(["x", "y", "z"], np.array([1.0, 2.0, 1.0])) == [("y", 2.0), ("x", 1.0), ("z", 1.0)]


def test_cache_matches_end_to_end():
    same, worst = cache_agreement(*cached_pipeline(30))
    assert same and worst <= 1e-5


def test_missing_user_is_reported():
    bundle, news_cache, _, _ = cached_pipeline(5)
    with pytest.raises(KeyError, match="missing from user cache"):
        rank_from_cache(news_cache, EmbeddingCache([], np.zeros((0, CFG.D))), bundle.valid)


def test_bench_report_shape():
    mixers = bench_mixers(d_in=8, heads=2, d_h=4)
    report = measure_scaling(mixers, [16, 32, 64], trials=5)
    lines = report.tsv().splitlines()
    assert lines[0] == BENCH_HEADER and len(lines) == 7
    assert report.row("fastformer", 32).flops == 2 * report.row("fastformer", 16).flops
    assert all(r.median > 0 for r in report.rows)
    with pytest.raises(ValueError):
        measure_scaling(mixers, [16, 32], trials=5)
    with pytest.raises(ValueError):
        measure_scaling(mixers, [16, 32, 64], trials=3)
