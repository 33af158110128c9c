import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fum.data import (
    Impression,
    NewsRow,
    ParseError,
    Vocabulary,
    build_vocabulary,
    load_mind_dir,
    load_pretrained_vectors,
    parse_behaviors_tsv,
    parse_news_tsv,
    read_news_rows,
    tokenize,
    write_behaviors_tsv,
    write_news_tsv,
)
from fum.metrics import report_from_scores
from fum.synthetic import SyntheticSpec, generate_synthetic

NEWS_TSV = (
    "N1\tsports\tsoccer\tCity win the cup\tA late goal won it.\thttp://a\t"
    '[{"Label": "Man City", "Type": "O"}]\t[]\n'
    "N2\tfinance\tmarkets\tStocks fall\tMarkets dropped on rates; stocks fell.\thttp://b\t[]\t[]\n"
    "N3\tsports\tsoccer\tCup final preview\t\thttp://c\tnot json\t[]\n"
)
BEHAVIORS_TSV = "1\tU1\t11/11/2019 9:05:58 AM\tN1 N2\tN3-1 N2-0\n2\tU2\t11/11/2019 9:06:00 AM\t\tN1-0 N3-1 N2-0\n"


@pytest.fixture
def mind_dir(tmp_path):
    for split in ("train", "valid"):
        (tmp_path / split).mkdir()
        (tmp_path / split / "news.tsv").write_text(NEWS_TSV, encoding="utf-8")
        (tmp_path / split / "behaviors.tsv").write_text(BEHAVIORS_TSV, encoding="utf-8")
    return tmp_path


def test_tokenize_examples():
    assert tokenize("Hello, World!") == ["hello", "world"]
    assert tokenize("U.S. stocks-fall 3%") == ["u", "s", "stocks", "fall", "3"]
    assert tokenize("") == []
    assert tokenize("snake_case Café") == ["snake", "case", "café"]


def test_read_news_rows(mind_dir):
    rows = read_news_rows(mind_dir / "train" / "news.tsv")
    assert [r.news_id for r in rows] == ["N1", "N2", "N3"]
    assert rows[0].title == "City win the cup" and rows[2].abstract == ""


def test_news_column_count_error(tmp_path):
    p = tmp_path / "news.tsv"
    p.write_text("N1\tsports\tsoccer\n", encoding="utf-8")
    with pytest.raises(ParseError, match=":1: expected 8 columns"):
        read_news_rows(p)


def test_parse_news_genres_and_warnings(mind_dir):
    rows = read_news_rows(mind_dir / "train" / "news.tsv")
    vocab = build_vocabulary(rows, k=4, min_count=1)
    table = parse_news_tsv(mind_dir / "train" / "news.tsv", vocab, k=4, l=5)
    n1 = table.record("N1")
    words = lambda j: [vocab.tokens[t] for t, m in zip(n1.tokens[j], n1.mask[j]) if m]  # noqa: E731
    assert words(0) == ["city", "win", "the", "cup"]
    assert words(1) == ["a", "late", "goal", "won", "it"]
    assert words(2) == ["sports", "soccer"]
    assert words(3) == ["man", "city"]
    n3 = table.record("N3")
    assert not n3.mask[1].any() and not n3.mask[3].any()
    assert table.warnings["entity_parse"] == 1
    assert table.row("N1") == 1 and np.all(table.tokens[0] == 0)


def test_truncation_keeps_first_tokens(mind_dir):
    rows = read_news_rows(mind_dir / "train" / "news.tsv")
    vocab = build_vocabulary(rows, k=2, min_count=1)
    table = parse_news_tsv(mind_dir / "train" / "news.tsv", vocab, k=2, l=2)
    assert [vocab.tokens[t] for t in table.record("N2").tokens[1]] == ["markets", "dropped"]


def test_vocabulary_order_and_threshold():
    v = Vocabulary.build([["b", "a", "b"], ["c", "a", "d"], ["b"]], min_count=2)
    assert v.tokens == ["<pad>", "<unk>", "b", "a"]
    assert v.encode(["a", "zzz", "b"]) == [3, 1, 2]
    assert v["c"] == 1


def test_parse_behaviors(mind_dir):
    imps = parse_behaviors_tsv(mind_dir / "train" / "behaviors.tsv")
    assert imps[0].history == ("N1", "N2")
    assert imps[0].candidates == (("N3", True), ("N2", False))
    assert imps[1].history == () and imps[1].labels == [0, 1, 0]


@pytest.mark.parametrize(
    "line,match",
    [
        ("1\tU1\tt\tN1\n", "expected 5 columns"),
        ("1\tU1\tt\tN1\tN2-2\n", "malformed candidate 'N2-2'"),
        ("1\tU1\tt\tN1\tN2\n", "malformed candidate 'N2'"),
        ("1\tU1\tt\tN1\t\n", "no candidates"),
    ],
)
def test_behaviors_errors(tmp_path, line, match):
    p = tmp_path / "b.tsv"
    p.write_text("1\tU1\tt\t\tN1-1\n" + line, encoding="utf-8")
    with pytest.raises(ParseError, match=f":2: {match}"):
        parse_behaviors_tsv(p)


def test_load_mind_dir(mind_dir):
    b = load_mind_dir(mind_dir, k=4, l=8, min_count=1)
    assert len(b.news) == 3 and len(b.train) == 2 and len(b.valid) == 2
    assert b.news.history_rows(["N3", "N1", "N2"], 2)[0].tolist() == [1, 2]
    rows, mask = b.news.history_rows(["N2"], 3)
    assert rows.tolist() == [2, 0, 0] and mask.tolist() == [True, False, False]
    with pytest.raises(KeyError, match="N9"):
        b.news.row("N9")


def test_pretrained_vectors(tmp_path):
    vocab = Vocabulary.build([["cup", "goal", "stocks"]], min_count=1)
    p = tmp_path / "vec.txt"
    p.write_text("cup 0.5 -1\nmissing 1 1\n\ngoal  2.0\t3.0\n", encoding="utf-8")
    table, hit = load_pretrained_vectors(p, vocab, 2)
    assert table.shape == (5, 2)
    np.testing.assert_array_equal(table[vocab["cup"]], [0.5, -1.0])
    np.testing.assert_array_equal(table[vocab["goal"]], [2.0, 3.0])
    assert hit == pytest.approx(2 / 3)
    p.write_text("cup 0.5\n", encoding="utf-8")
    with pytest.raises(ParseError, match=":1: expected 2 values"):
        load_pretrained_vectors(p, vocab, 2)


text = st.text(st.characters(blacklist_categories=("Cc", "Cs", "Zl", "Zp")), max_size=20).map(lambda s: s.replace("\t", " "))
ident = st.from_regex(r"[A-Za-z][A-Za-z0-9]{0,6}", fullmatch=True)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(ident, text, text, text, text), min_size=1, max_size=5, unique_by=lambda t: t[0]))
def test_news_roundtrip(tmp_path_factory, items):
    rows = [NewsRow(i, c, s, t.strip() or "x", a.strip()) for i, c, s, t, a in items]
    rows = [NewsRow(r.news_id, r.category.strip(), r.subcategory.strip(), r.title, r.abstract) for r in rows]
    p = tmp_path_factory.mktemp("rt") / "news.tsv"
    write_news_tsv(rows, p)
    assert read_news_rows(p) == rows


@settings(max_examples=100, deadline=None)
@given(
    st.lists(
        st.tuples(ident, st.lists(ident, max_size=4), st.lists(st.tuples(ident, st.booleans()), min_size=1, max_size=4)),
        min_size=1,
        max_size=5,
    )
)
def test_behaviors_roundtrip(tmp_path_factory, items):
    imps = [Impression(str(n), u, "t", tuple(h), tuple(c)) for n, (u, h, c) in enumerate(items)]
    p = tmp_path_factory.mktemp("rt") / "behaviors.tsv"
    write_behaviors_tsv(imps, p)
    assert parse_behaviors_tsv(p) == imps


SMALL = SyntheticSpec(n_users=50, n_news=100, n_train=80, n_valid=40, seed=5)


def test_synthetic_deterministic(tmp_path):
    a, b = generate_synthetic(SMALL), generate_synthetic(SMALL)
    a.write(tmp_path / "a")
    b.write(tmp_path / "b")
    for rel in ("train/news.tsv", "train/behaviors.tsv", "valid/news.tsv", "valid/behaviors.tsv"):
        assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes()
    assert generate_synthetic(SyntheticSpec(n_users=50, n_news=100, n_train=80, n_valid=40, seed=6)).train != a.train


def test_synthetic_shape_and_roundtrip(tmp_path):
    c = generate_synthetic(SMALL)
    assert len(c.news) == 100 and len(c.train) == 80 and len(c.valid) == 40
    c.write(tmp_path)
    b = load_mind_dir(tmp_path, k=4, l=16)
    assert b.train == c.train and b.valid == c.valid
    assert b.news.ids == [r.news_id for r in c.news]


def test_synthetic_without_noise_is_separable():
    c = generate_synthetic(SyntheticSpec(n_users=50, n_news=100, n_train=10, n_valid=60, noise=0.0, seed=2))
    for imp in c.valid:
        t = c.user_topic[imp.user_id]
        assert all(clicked == (c.news_topic[n] == t) for n, clicked in imp.candidates)
        assert all(c.news_topic[n] == t for n in imp.history)
    scores = [[float(c.news_topic[n] == c.user_topic[imp.user_id]) for n in imp.candidate_ids] for imp in c.valid]
    assert report_from_scores(scores, [imp.labels for imp in c.valid]).auc == 1.0


def test_synthetic_rejects_bad_noise():
    with pytest.raises(ValueError):
        SyntheticSpec(noise=0.5)
