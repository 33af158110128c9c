"""Impression-level ranking metrics and the ablation harness."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

import numpy as np

from fum.data import Impression, NewsTable

if TYPE_CHECKING:
    from fum.config import TrainConfig
    from fum.data import DatasetBundle
    from fum.model import FUM


def _check(scores, labels) -> tuple[np.ndarray, np.ndarray]:
    s = np.asarray(scores, dtype=np.float64).reshape(-1)
    y = np.asarray(labels).reshape(-1).astype(bool)
    if s.shape != y.shape:
        raise ValueError(f"{s.size} scores for {y.size} labels")
    return s, y


def _ranks(scores: np.ndarray) -> np.ndarray:
    """1-based rank under descending score; ties keep original order."""
    order = np.argsort(-scores, kind="stable")
    ranks = np.empty(len(scores), dtype=np.int64)
    ranks[order] = np.arange(1, len(scores) + 1)
    return ranks


def auc(scores, labels) -> float:
    """Probability a positive outscores a negative, ties counting one half.

    Returns NaN for single-class input.
    """
    s, y = _check(scores, labels)
    n_pos, n_neg = int(y.sum()), int((~y).sum())
    if n_pos == 0 or n_neg == 0:
        return math.nan
    # average ranks in ascending order
    order = np.argsort(s, kind="stable")
    sorted_s = s[order]
    ranks = np.empty(len(s))
    _, first, counts = np.unique(sorted_s, return_index=True, return_counts=True)
    avg = first + (counts + 1) / 2.0
    ranks[order] = np.repeat(avg, counts)
    return float((ranks[y].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def mrr(scores, labels) -> float:
    """Mean reciprocal rank of the positives; NaN without positives."""
    s, y = _check(scores, labels)
    if not y.any():
        return math.nan
    return float(np.mean(1.0 / _ranks(s)[y]))


def ndcg_at_k(scores, labels, k: int) -> float:
    s, y = _check(scores, labels)
    if not y.any():
        return 0.0
    ranks = _ranks(s)
    discounts = 1.0 / np.log2(np.arange(2, k + 2))
    dcg = sum(discounts[r - 1] for r in ranks[y] if r <= k)
    ideal = discounts[: min(k, int(y.sum()))].sum()
    return float(dcg / ideal)


@dataclass(frozen=True)
class MetricReport:
    auc: float
    mrr: float
    ndcg5: float
    ndcg10: float
    impressions: int
    skipped: int

    def tsv(self) -> str:
        return f"{self.auc:.6f}\t{self.mrr:.6f}\t{self.ndcg5:.6f}\t{self.ndcg10:.6f}"

    def as_dict(self) -> dict[str, float]:
        return {"auc": self.auc, "mrr": self.mrr, "ndcg5": self.ndcg5, "ndcg10": self.ndcg10}


REPORT_HEADER = "auc\tmrr\tndcg5\tndcg10"


def report_from_scores(score_lists: Sequence[Sequence[float]], label_lists: Sequence[Sequence[int]]) -> MetricReport:
    """Per-impression metrics, macro-averaged over impressions with both classes."""
    aucs, mrrs, n5, n10 = [], [], [], []
    skipped = 0
    for s, y in zip(score_lists, label_lists):
        a = auc(s, y)
        if math.isnan(a):
            skipped += 1
            continue
        aucs.append(a)
        mrrs.append(mrr(s, y))
        n5.append(ndcg_at_k(s, y, 5))
        n10.append(ndcg_at_k(s, y, 10))
    n = len(aucs)

    def avg(xs):
        return math.fsum(xs) / n if n else math.nan

    return MetricReport(avg(aucs), avg(mrrs), avg(n5), avg(n10), n, skipped)


def impression_scores(model: "FUM", news: NewsTable, impressions: Sequence[Impression]) -> list[np.ndarray]:
    """Dot-product scores of every candidate, from one pass over all news."""
    vectors = model.encode_all_news(news)
    users = model.encode_impression_users(news, list(impressions), vectors)
    return [vectors[news.rows(imp.candidate_ids)] @ u for imp, u in zip(impressions, users)]


def evaluate(model: "FUM", news: NewsTable, impressions: Sequence[Impression]) -> MetricReport:
    scores = impression_scores(model, news, impressions)
    return report_from_scores(scores, [imp.labels for imp in impressions])


def ablation_run(data: "DatasetBundle", config: "TrainConfig") -> dict[str, MetricReport]:
    """Train full, fine-only and coarse-only models with shared seed and data order."""
    from fum.training import run_training

    table = {}
    for mode in ("full", "fine_only", "coarse_only"):
        result = run_training(data, config.replace(ablation=mode), evaluate_each_epoch=False)
        table[mode] = evaluate(result.model, data.news, data.valid)
    return table


def ablation_tsv(table: dict[str, MetricReport]) -> str:
    lines = ["mode\t" + REPORT_HEADER]
    lines += [f"{mode}\t{rep.tsv()}" for mode, rep in table.items()]
    return "\n".join(lines) + "\n"
