import numpy as np
import pytest
from conftest import TINY, VOCAB, random_model, random_record
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from fum.data import NewsRecord
from fum.model import FUM
from fum.news_encoder import encode_genre_text, encode_news, encode_news_batch


def oracle_news_vector(model, rec):
    enc = model.news_encoder
    words = model.embed.words.data
    offsets = model.embed.genre_offset.data
    genre_vecs, genre_mask = [], []
    for j in range(rec.k):
        x = [(words[t] + offsets[j]).tolist() for t in rec.tokens[j]]
        m = rec.mask[j].tolist()
        genre_mask.append(any(m))
        if not any(m):
            genre_vecs.append([0.0] * enc.D)
            continue
        sa = enc.text[j]
        h = oracles.self_attention(
            x,
            m,
            [w.data.tolist() for w in sa.Wq],
            [w.data.tolist() for w in sa.Wk],
            [w.data.tolist() for w in sa.Wv],
            sa.Wo.data.tolist(),
        )
        p = enc.token_pool[j]
        genre_vecs.append(oracles.mlp_pool(h, m, p.W1.data.tolist(), p.b1.data.tolist(), p.v2.data.tolist()))
    g = enc.genre_pool
    return oracles.mlp_pool(genre_vecs, genre_mask, g.W1.data.tolist(), g.b1.data.tolist(), g.v2.data.tolist())


@pytest.mark.parametrize("seed", range(3))
def test_news_vector_matches_oracle(seed):
    rng = np.random.default_rng(seed)
    model = random_model(seed)
    rec = random_record(rng, TINY.k, TINY.l)
    out = encode_news(rec, model.news_encoder).vector.data
    np.testing.assert_allclose(out, oracle_news_vector(model, rec), rtol=0, atol=1e-12)


def test_empty_genre_is_skipped():
    rng = np.random.default_rng(3)
    model = random_model(3)
    rec = random_record(rng, TINY.k, TINY.l)
    rec.tokens[1], rec.mask[1] = 0, False
    np.testing.assert_allclose(encode_news(rec, model.news_encoder).vector.data, oracle_news_vector(model, rec), atol=1e-12)
    # with one genre left the genre pool is the identity
    solo = encode_genre_text(rec.tokens[0], rec.mask[0], 0, model.news_encoder).data
    np.testing.assert_allclose(encode_news(rec, model.news_encoder).vector.data, solo, atol=1e-15)


def test_all_padding_genre_encodes_to_zero():
    model = random_model(1)
    out = encode_genre_text(np.zeros(TINY.l, int), np.zeros(TINY.l, bool), 0, model.news_encoder)
    assert out.shape == (TINY.D,) and np.all(out.data == 0)


def test_single_genre_model_returns_genre_vector():
    cfg = TINY.replace(k=1)
    model = FUM(cfg, VOCAB)
    model.store.randomize(0.5, 2)
    rec = random_record(np.random.default_rng(2), 1, cfg.l)
    t1 = encode_genre_text(rec.tokens[0], rec.mask[0], 0, model.news_encoder).data
    np.testing.assert_allclose(encode_news(rec, model.news_encoder).vector.data, t1, atol=1e-15)


def test_batch_equals_single():
    rng = np.random.default_rng(4)
    model = random_model(4)
    recs = [random_record(rng, TINY.k, TINY.l, f"N{i}") for i in range(6)]
    batch = encode_news_batch(recs, model.news_encoder)
    for rec, enc in zip(recs, batch):
        assert enc.news_id == rec.news_id
        assert np.array_equal(enc.vector.data, encode_news(rec, model.news_encoder).vector.data)
    assert encode_news_batch([], model.news_encoder) == []


def test_vectorised_encoder_agrees_with_per_item():
    rng = np.random.default_rng(5)
    model = random_model(5)
    recs = [random_record(rng, TINY.k, TINY.l) for _ in range(5)]
    tokens = np.stack([r.tokens for r in recs])
    mask = np.stack([r.mask for r in recs])
    together = model.encode_news(tokens, mask).data
    for i, r in enumerate(recs):
        np.testing.assert_allclose(together[i], encode_news(r, model.news_encoder).vector.data, atol=1e-13)


def test_input_errors():
    model = random_model(0)
    with pytest.raises(ValueError, match="genres"):
        encode_news(NewsRecord("x", np.ones((3, TINY.l), int), np.ones((3, TINY.l), bool)), model.news_encoder)
    with pytest.raises(ValueError, match="no text"):
        encode_news(NewsRecord("x", np.zeros((2, TINY.l), int), np.zeros((2, TINY.l), bool)), model.news_encoder)
    with pytest.raises(IndexError):
        encode_genre_text([2, 3, 0, 0], [True, True, False, False], 2, model.news_encoder)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_token_permutation_invariance(seed):
    # no positional signal in the text encoder: shuffling live tokens within a genre changes nothing
    rng = np.random.default_rng(seed)
    model = random_model(seed % 7)
    rec = random_record(rng, TINY.k, TINY.l)
    shuffled = NewsRecord(rec.news_id, rec.tokens.copy(), rec.mask.copy())
    for j in range(TINY.k):
        n = int(rec.mask[j].sum())
        shuffled.tokens[j, :n] = rng.permutation(rec.tokens[j, :n])
    a = encode_news(rec, model.news_encoder).vector.data
    b = encode_news(shuffled, model.news_encoder).vector.data
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_padding_content_is_ignored(seed):
    rng = np.random.default_rng(seed)
    model = random_model(seed % 7)
    rec = random_record(rng, TINY.k, TINY.l)
    noisy = NewsRecord(rec.news_id, rec.tokens.copy(), rec.mask)
    noisy.tokens[~rec.mask] = rng.integers(0, VOCAB, (~rec.mask).sum())
    a = encode_news(rec, model.news_encoder).vector.data
    assert np.array_equal(a, encode_news(noisy, model.news_encoder).vector.data)
