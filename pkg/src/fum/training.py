"""BPR training: negative sampling, the pairwise loss and the epoch loop."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from fum import tensor as T
from fum.config import TrainConfig
from fum.data import DatasetBundle, Impression, NewsTable
from fum.metrics import MetricReport, evaluate
from fum.model import FUM, user_batch
from fum.params import AdamState, adam_step
from fum.tensor import Tensor

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainingSample:
    history: tuple[str, ...]
    positive: str
    negatives: tuple[str, ...]


def bpr_loss(r_pos, r_negs, variant: str = "log_sigmoid"):
    """Mean pairwise loss of one clicked score against non-clicked scores.

    ``log_sigmoid`` is ``-ln σ(r_pos - r_neg)``; ``paper_sigmoid`` is the
    literal ``-σ(r_pos - r_neg)``.  Accepts floats or tensors; the last axis
    of ``r_negs`` runs over negatives.
    """
    if isinstance(r_pos, Tensor) or isinstance(r_negs, Tensor):
        diff = T.as_tensor(r_pos) - T.as_tensor(r_negs)
        if variant == "log_sigmoid":
            return T.mean(-T.log_sigmoid(diff))
        if variant == "paper_sigmoid":
            return T.mean(-T.sigmoid(diff))
        raise ValueError(f"unknown loss variant {variant!r}")
    negs = np.atleast_1d(np.asarray(r_negs, dtype=np.float64))
    if negs.size == 0:
        raise ValueError("bpr_loss needs at least one negative")
    diff = float(r_pos) - negs
    if variant == "log_sigmoid":
        return float(np.mean(np.logaddexp(0.0, -diff)))
    if variant == "paper_sigmoid":
        return float(np.mean(-0.5 * (1.0 + np.tanh(0.5 * diff))))
    raise ValueError(f"unknown loss variant {variant!r}")


@dataclass
class SampleStats:
    skipped: int = 0


def sample_negatives(impression: Impression, ratio: int, rng: np.random.Generator, stats: SampleStats | None = None) -> list[TrainingSample]:
    """One sample per click, pairing it with ``ratio`` non-clicked candidates.

    Negatives are drawn without replacement, or with replacement when the
    impression has fewer than ``ratio``.  Impressions without a click or
    without a non-click yield nothing and are counted in ``stats``.
    """
    pos = [n for n, c in impression.candidates if c]
    neg = [n for n, c in impression.candidates if not c]
    if not pos or not neg:
        if stats is not None:
            stats.skipped += 1
        return []
    out = []
    for p in pos:
        idx = rng.choice(len(neg), size=ratio, replace=len(neg) < ratio)
        out.append(TrainingSample(impression.history, p, tuple(neg[i] for i in idx)))
    return out


def batch_loss(model: FUM, news: NewsTable, samples: Sequence[TrainingSample]) -> Tensor:
    cfg = model.config
    batch = user_batch(news, [s.history for s in samples], cfg.m)
    cands = np.array([[news.row(s.positive)] + [news.row(n) for n in s.negatives] for s in samples])
    scores = model.candidate_scores(news, batch, cands)
    return bpr_loss(scores[:, 0:1], scores[:, 1:], cfg.loss)


def train_step(model: FUM, news: NewsTable, samples: Sequence[TrainingSample], adam: AdamState) -> float:
    loss = batch_loss(model, news, samples)
    T.backward(loss, model.store.tensors())
    adam_step(model.store, adam)
    return loss.item()


@dataclass
class TrainLogRow:
    epoch: int
    split: str
    report: MetricReport
    loss: float

    def tsv(self) -> str:
        r = self.report
        return f"{self.epoch}\t{self.split}\t{r.auc:.6f}\t{r.mrr:.6f}\t{r.ndcg5:.6f}\t{r.ndcg10:.6f}\t{self.loss:.6f}"


LOG_HEADER = "epoch\tsplit\tauc\tmrr\tndcg5\tndcg10\tloss"


@dataclass
class TrainResult:
    model: FUM
    adam: AdamState
    log: list[TrainLogRow] = field(default_factory=list)
    skipped: int = 0

    def log_tsv(self) -> str:
        return "\n".join([LOG_HEADER] + [row.tsv() for row in self.log]) + "\n"


def epoch_samples(train: Sequence[Impression], cfg: TrainConfig, epoch: int, stats: SampleStats | None = None) -> list[TrainingSample]:
    """Negatives and shuffle order for one epoch, fixed by (seed, epoch)."""
    rng = np.random.default_rng([cfg.seed, 1, epoch])
    samples = []
    for imp in train:
        samples.extend(sample_negatives(imp, cfg.negatives_per_positive, rng, stats))
    order = rng.permutation(len(samples))
    return [samples[i] for i in order]


def run_training(data: DatasetBundle, config: TrainConfig, model: FUM | None = None, evaluate_each_epoch: bool = True) -> TrainResult:
    """Train with Adam on shuffled minibatches; validation metrics after each epoch."""
    if not data.train:
        raise ValueError("empty training set")
    if model is None:
        model = FUM(config, len(data.vocab))
    adam = AdamState(learning_rate=config.learning_rate)
    result = TrainResult(model, adam)
    for epoch in range(1, config.epochs + 1):
        stats = SampleStats()
        samples = epoch_samples(data.train, config, epoch, stats)
        if not samples:
            raise ValueError("no trainable impressions (each needs a click and a non-click)")
        losses = []
        for start in range(0, len(samples), config.batch_size):
            part = samples[start : start + config.batch_size]
            losses.append(train_step(model, data.news, part, adam) * len(part))
        mean_loss = math.fsum(losses) / len(samples)
        result.skipped = stats.skipped
        log.info("epoch %d: train loss %.6f over %d samples", epoch, mean_loss, len(samples))
        if evaluate_each_epoch and data.valid:
            report = evaluate(model, data.news, data.valid)
            result.log.append(TrainLogRow(epoch, "valid", report, mean_loss))
    return result
