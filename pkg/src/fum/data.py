"""MIND-format parsing, tokenization, vocabulary and pretrained vectors.

news.tsv has eight tab-separated columns::

    id  category  subcategory  title  abstract  url  title_entities  abstract_entities

where the entity columns are JSON lists of objects carrying a ``Label``.
behaviors.tsv has five::

    impression_id  user_id  time  history  candidates

with space-separated history ids and ``newsId-label`` candidate tokens.
"""

from __future__ import annotations

import json
import logging
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from fum.params import glorot_bound

log = logging.getLogger(__name__)

PAD_ID = 0
UNK_ID = 1
GENRES = ("title", "abstract", "topic", "entity")

_TOKEN_RE = re.compile(r"[^\W_]+")


def tokenize(text: str) -> list[str]:
    """Lowercase, then split into maximal runs of alphanumeric characters."""
    return _TOKEN_RE.findall(text.lower())


class ParseError(ValueError):
    pass


# ---------------------------------------------------------------------------
# raw rows


@dataclass(frozen=True)
class NewsRow:
    news_id: str
    category: str
    subcategory: str
    title: str
    abstract: str
    url: str = ""
    title_entities: str = "[]"
    abstract_entities: str = "[]"

    def to_line(self) -> str:
        return "\t".join(
            [
                self.news_id,
                self.category,
                self.subcategory,
                self.title,
                self.abstract,
                self.url,
                self.title_entities,
                self.abstract_entities,
            ]
        )


@dataclass(frozen=True)
class Impression:
    impression_id: str
    user_id: str
    time: str
    history: tuple[str, ...]
    candidates: tuple[tuple[str, bool], ...]

    @property
    def labels(self) -> list[int]:
        return [int(c) for _, c in self.candidates]

    @property
    def candidate_ids(self) -> list[str]:
        return [n for n, _ in self.candidates]

    def to_line(self) -> str:
        cands = " ".join(f"{n}-{int(c)}" for n, c in self.candidates)
        return "\t".join([self.impression_id, self.user_id, self.time, " ".join(self.history), cands])


def entity_labels(column: str) -> list[str]:
    """Label fields of a MIND entity column; raises ``ValueError`` if unparseable."""
    column = column.strip()
    if not column:
        return []
    items = json.loads(column)
    if not isinstance(items, list):
        raise ValueError("entity column is not a list")
    return [str(item["Label"]) for item in items]


def read_news_rows(path) -> list[NewsRow]:
    rows = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.rstrip("\n").rstrip("\r")
            if not line:
                continue
            cols = line.split("\t")
            if len(cols) != 8:
                raise ParseError(f"{path}:{lineno}: expected 8 columns, got {len(cols)}")
            rows.append(NewsRow(*cols))
    return rows


def genre_tokens(row: NewsRow, warnings: Counter | None = None) -> list[list[str]]:
    """Token lists for the four genres: title, abstract, topic labels, entities."""
    entities: list[str] = []
    try:
        for column in (row.title_entities, row.abstract_entities):
            for label in entity_labels(column):
                entities.extend(tokenize(label))
    except (ValueError, KeyError, TypeError):
        entities = []
        if warnings is not None:
            warnings["entity_parse"] += 1
    return [
        tokenize(row.title),
        tokenize(row.abstract),
        tokenize(row.category) + tokenize(row.subcategory),
        entities,
    ]


def write_news_tsv(rows: Iterable[NewsRow], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for row in rows:
            f.write(row.to_line() + "\n")


def parse_behaviors_tsv(path) -> list[Impression]:
    out = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.rstrip("\n").rstrip("\r")
            if not line:
                continue
            cols = line.split("\t")
            if len(cols) != 5:
                raise ParseError(f"{path}:{lineno}: expected 5 columns, got {len(cols)}")
            imp_id, user_id, time, history, cands = cols
            candidates = []
            for tok in cands.split():
                news_id, sep, label = tok.rpartition("-")
                if not sep or not news_id or label not in ("0", "1"):
                    raise ParseError(f"{path}:{lineno}: malformed candidate {tok!r}")
                candidates.append((news_id, label == "1"))
            if not candidates:
                raise ParseError(f"{path}:{lineno}: no candidates")
            out.append(Impression(imp_id, user_id, time, tuple(history.split()), tuple(candidates)))
    return out


def write_behaviors_tsv(impressions: Iterable[Impression], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for imp in impressions:
            f.write(imp.to_line() + "\n")


# ---------------------------------------------------------------------------
# vocabulary


@dataclass
class Vocabulary:
    """Token ids: 0 is padding, 1 is unknown, the rest by descending count."""

    tokens: list[str]
    min_count: int = 2
    index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        self.index = {t: i for i, t in enumerate(self.tokens)}

    @classmethod
    def build(cls, token_lists: Iterable[Sequence[str]], min_count: int = 2) -> "Vocabulary":
        counts = Counter()
        for toks in token_lists:
            counts.update(toks)
        kept = sorted((t for t, c in counts.items() if c >= min_count), key=lambda t: (-counts[t], t))
        return cls(["<pad>", "<unk>"] + kept, min_count)

    def __len__(self) -> int:
        return len(self.tokens)

    def __getitem__(self, token: str) -> int:
        return self.index.get(token, UNK_ID)

    def encode(self, tokens: Sequence[str]) -> list[int]:
        return [self[t] for t in tokens]


def build_vocabulary(rows: Iterable[NewsRow], k: int = 4, min_count: int = 2) -> Vocabulary:
    def corpus():
        for row in rows:
            for toks in genre_tokens(row)[:k]:
                yield toks

    return Vocabulary.build(corpus(), min_count)


# ---------------------------------------------------------------------------
# encoded news


@dataclass
class NewsRecord:
    news_id: str
    tokens: np.ndarray  # (k, l) int64
    mask: np.ndarray  # (k, l) bool

    @property
    def k(self) -> int:
        return self.tokens.shape[0]

    def __eq__(self, other):
        return (
            isinstance(other, NewsRecord)
            and self.news_id == other.news_id
            and np.array_equal(self.tokens, other.tokens)
            and np.array_equal(self.mask, other.mask)
        )


def pad_tokens(ids: Sequence[int], l: int) -> tuple[np.ndarray, np.ndarray]:
    """Keep the first ``l`` ids, pad with zeros; returns (ids, mask)."""
    out = np.zeros(l, dtype=np.int64)
    ids = list(ids)[:l]
    out[: len(ids)] = ids
    mask = np.zeros(l, dtype=bool)
    mask[: len(ids)] = True
    return out, mask


def encode_news_row(row: NewsRow, vocab: Vocabulary, k: int, l: int, warnings: Counter | None = None) -> NewsRecord:
    genres = genre_tokens(row, warnings)[:k]
    toks = np.zeros((k, l), dtype=np.int64)
    mask = np.zeros((k, l), dtype=bool)
    for j, g in enumerate(genres):
        toks[j], mask[j] = pad_tokens(vocab.encode(g), l)
    return NewsRecord(row.news_id, toks, mask)


class NewsTable:
    """Encoded articles as dense arrays with a reserved all-padding row 0."""

    def __init__(self, records: Sequence[NewsRecord], k: int, l: int):
        self.k, self.l = k, l
        self.ids = [r.news_id for r in records]
        if len(set(self.ids)) != len(self.ids):
            raise ValueError("duplicate news ids")
        self.index = {nid: i + 1 for i, nid in enumerate(self.ids)}
        self.tokens = np.zeros((len(records) + 1, k, l), dtype=np.int64)
        self.mask = np.zeros((len(records) + 1, k, l), dtype=bool)
        for i, r in enumerate(records, 1):
            self.tokens[i], self.mask[i] = r.tokens, r.mask
        self.warnings: Counter = Counter()

    def __len__(self) -> int:
        return len(self.ids)

    def __contains__(self, news_id: str) -> bool:
        return news_id in self.index

    def record(self, news_id: str) -> NewsRecord:
        i = self.row(news_id)
        return NewsRecord(news_id, self.tokens[i].copy(), self.mask[i].copy())

    def records(self) -> list[NewsRecord]:
        return [self.record(n) for n in self.ids]

    def row(self, news_id: str) -> int:
        try:
            return self.index[news_id]
        except KeyError:
            raise KeyError(f"unknown news id {news_id!r}") from None

    def rows(self, news_ids: Sequence[str]) -> np.ndarray:
        return np.array([self.row(n) for n in news_ids], dtype=np.int64)

    def history_rows(self, history: Sequence[str], m: int) -> tuple[np.ndarray, np.ndarray]:
        """Rows of the most recent ``m`` clicks, padded at the end with row 0."""
        recent = list(history)[-m:] if m > 0 else []
        rows = np.zeros(m, dtype=np.int64)
        rows[: len(recent)] = self.rows(recent)
        mask = np.zeros(m, dtype=bool)
        mask[: len(recent)] = True
        return rows, mask


def parse_news_tsv(path, vocab: Vocabulary, k: int = 4, l: int = 16) -> NewsTable:
    warnings: Counter = Counter()
    rows = read_news_rows(path)
    table = NewsTable([encode_news_row(r, vocab, k, l, warnings) for r in rows], k, l)
    table.warnings = warnings
    if warnings:
        log.warning("%s: %d unparseable entity columns", path, warnings["entity_parse"])
    return table


# ---------------------------------------------------------------------------
# pretrained vectors


def load_pretrained_vectors(path, vocab: Vocabulary, d: int, seed: int = 0) -> tuple[np.ndarray, float]:
    """Word table initialized from a text vector file; returns (table, hit ratio).

    Each line holds a token followed by ``d`` numbers.  Vocabulary entries not
    in the file keep a uniform Glorot draw.
    """
    rng = np.random.default_rng(seed)
    r = glorot_bound((len(vocab), d))
    table = rng.uniform(-r, r, size=(len(vocab), d))
    hits: set[int] = set()
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != d + 1:
                raise ParseError(f"{path}:{lineno}: expected {d} values, got {len(parts) - 1}")
            i = vocab.index.get(parts[0])
            if i is None or i < 2:
                continue
            table[i] = np.array(parts[1:], dtype=np.float64)
            hits.add(i)
    real = len(vocab) - 2
    return table, (len(hits) / real if real > 0 else 0.0)


# ---------------------------------------------------------------------------
# datasets


@dataclass
class DatasetBundle:
    news: NewsTable
    vocab: Vocabulary
    train: list[Impression]
    valid: list[Impression]


def load_mind_dir(root, k: int = 4, l: int = 16, min_count: int = 2) -> DatasetBundle:
    """Load ``root/{train,valid}/{news,behaviors}.tsv``; vocabulary from train only."""
    root = Path(root)
    train_rows = read_news_rows(root / "train" / "news.tsv")
    vocab = build_vocabulary(train_rows, k, min_count)
    rows = {r.news_id: r for r in train_rows}
    valid_news = root / "valid" / "news.tsv"
    if valid_news.exists():
        for r in read_news_rows(valid_news):
            rows.setdefault(r.news_id, r)
    warnings: Counter = Counter()
    table = NewsTable([encode_news_row(r, vocab, k, l, warnings) for r in rows.values()], k, l)
    table.warnings = warnings
    train = parse_behaviors_tsv(root / "train" / "behaviors.tsv")
    valid_path = root / "valid" / "behaviors.tsv"
    valid = parse_behaviors_tsv(valid_path) if valid_path.exists() else []
    return DatasetBundle(table, vocab, train, valid)
