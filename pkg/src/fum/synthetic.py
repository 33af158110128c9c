"""Topic-structured synthetic news and impressions in MIND layout.

Every user has one latent topic and only clicked news of that topic.  An
impression offers ``pos_candidates`` unseen news of the user's topic and
``neg_candidates`` news of other topics; a candidate is clicked iff it shares
the user's topic, with each label flipped independently with probability
``noise``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from fum.data import (
    DatasetBundle,
    Impression,
    NewsRow,
    NewsTable,
    build_vocabulary,
    encode_news_row,
    write_behaviors_tsv,
    write_news_tsv,
)


@dataclass(frozen=True)
class SyntheticSpec:
    n_topics: int = 8
    n_users: int = 1000
    n_news: int = 2000
    n_train: int = 5000
    n_valid: int = 1000
    tokens_per_topic: int = 40
    shared_tokens: int = 40
    topic_token_share: float = 0.7
    title_len: int = 8
    abstract_len: int = 16
    max_history: int = 10
    pos_candidates: int = 2
    neg_candidates: int = 2
    noise: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.noise < 0.5:
            raise ValueError("noise must lie in [0, 0.5)")
        if self.n_topics < 2:
            raise ValueError("need at least two topics")
        if min(self.n_users, self.n_news, self.max_history, self.pos_candidates, self.neg_candidates) < 1:
            raise ValueError("sizes must be positive")


@dataclass
class SyntheticCorpus:
    spec: SyntheticSpec
    news: list[NewsRow]
    news_topic: dict[str, int]
    user_topic: dict[str, int]
    train: list[Impression]
    valid: list[Impression]

    def write(self, root) -> None:
        """Write ``root/{train,valid}/{news,behaviors}.tsv``."""
        root = Path(root)
        for split, imps in (("train", self.train), ("valid", self.valid)):
            (root / split).mkdir(parents=True, exist_ok=True)
            write_news_tsv(self.news, root / split / "news.tsv")
            write_behaviors_tsv(imps, root / split / "behaviors.tsv")

    def bundle(self, k: int = 1, l: int = 16, min_count: int = 2) -> DatasetBundle:
        vocab = build_vocabulary(self.news, k, min_count)
        table = NewsTable([encode_news_row(r, vocab, k, l) for r in self.news], k, l)
        return DatasetBundle(table, vocab, list(self.train), list(self.valid))


def _word(rng: np.random.Generator, used: set[str]) -> str:
    consonants, vowels = "bcdfghjklmnprstvz", "aeiou"
    while True:
        n = int(rng.integers(2, 4))
        w = "".join(consonants[rng.integers(len(consonants))] + vowels[rng.integers(len(vowels))] for _ in range(n))
        if w not in used:
            used.add(w)
            return w


def generate_synthetic(spec: SyntheticSpec) -> SyntheticCorpus:
    rng = np.random.default_rng(spec.seed)
    used: set[str] = set()
    topic_words = [[_word(rng, used) for _ in range(spec.tokens_per_topic)] for _ in range(spec.n_topics)]
    shared = [_word(rng, used) for _ in range(spec.shared_tokens)]
    topic_names = [_word(rng, used) for _ in range(spec.n_topics)]

    def text(topic: int, n: int) -> str:
        words = []
        for _ in range(n):
            if rng.random() < spec.topic_token_share:
                words.append(topic_words[topic][rng.integers(spec.tokens_per_topic)])
            else:
                words.append(shared[rng.integers(spec.shared_tokens)])
        return " ".join(words).capitalize()

    news: list[NewsRow] = []
    news_topic: dict[str, int] = {}
    by_topic: list[list[str]] = [[] for _ in range(spec.n_topics)]
    for i in range(spec.n_news):
        t = int(rng.integers(spec.n_topics))
        nid = f"N{i + 1}"
        entity = topic_words[t][rng.integers(spec.tokens_per_topic)].capitalize()
        ents = json.dumps([{"Label": entity, "Type": "P", "WikidataId": f"Q{t}"}])
        news.append(
            NewsRow(
                nid,
                topic_names[t],
                f"{topic_names[t]}{int(rng.integers(3))}",
                text(t, spec.title_len),
                text(t, spec.abstract_len),
                f"https://example.com/{nid}.html",
                ents,
                "[]",
            )
        )
        news_topic[nid] = t
        by_topic[t].append(nid)

    user_topic: dict[str, int] = {}
    histories: dict[str, tuple[str, ...]] = {}
    for u in range(spec.n_users):
        uid = f"U{u + 1}"
        t = int(rng.integers(spec.n_topics))
        while not by_topic[t]:
            t = int(rng.integers(spec.n_topics))
        user_topic[uid] = t
        h = int(rng.integers(1, spec.max_history + 1))
        pool = by_topic[t]
        picks = rng.choice(len(pool), size=min(h, len(pool)), replace=False)
        histories[uid] = tuple(pool[j] for j in picks)

    others = [[n for n in news_topic if news_topic[n] != t] for t in range(spec.n_topics)]
    impressions = []
    users = list(user_topic)
    for i in range(spec.n_train + spec.n_valid):
        uid = users[rng.integers(len(users))]
        t = user_topic[uid]
        seen = set(histories[uid])
        same = [n for n in by_topic[t] if n not in seen] or by_topic[t]
        other = others[t]
        cands = [same[j] for j in rng.choice(len(same), size=spec.pos_candidates, replace=len(same) < spec.pos_candidates)]
        cands += [other[j] for j in rng.choice(len(other), size=spec.neg_candidates, replace=False)]
        order = rng.permutation(len(cands))
        labeled = []
        for j in order:
            clicked = news_topic[cands[j]] == t
            if rng.random() < spec.noise:
                clicked = not clicked
            labeled.append((cands[j], clicked))
        minute = i % 60
        time = f"11/{9 + i // 3600 % 20}/2019 {1 + i // 60 % 12}:{minute:02d}:00 AM"
        impressions.append(Impression(str(i + 1), uid, time, histories[uid], tuple(labeled)))
    return SyntheticCorpus(
        spec,
        news,
        news_topic,
        user_topic,
        impressions[: spec.n_train],
        impressions[spec.n_train :],
    )
