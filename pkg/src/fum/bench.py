"""Sequence-length scaling benchmark for the two mixers."""

from __future__ import annotations

import statistics
import time
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from threadpoolctl import threadpool_limits

from fum.layers import FastformerLayer, SelfAttentionLayer, SequenceMixer, flop_count
from fum.params import ParamStore
from fum.tensor import Tensor


@dataclass
class BenchRow:
    mixer: str
    length: int
    mean: float
    stdev: float
    median: float
    flops: int

    def tsv(self) -> str:
        return f"{self.mixer}\t{self.length}\t{self.mean:.6f}\t{self.stdev:.6f}\t{self.median:.6f}\t{self.flops}"


BENCH_HEADER = "mixer\tlength\tmean_s\tstdev_s\tmedian_s\tflops"


@dataclass
class BenchReport:
    rows: list[BenchRow] = field(default_factory=list)
    trials: int = 5

    def row(self, mixer: str, length: int) -> BenchRow:
        for r in self.rows:
            if r.mixer == mixer and r.length == length:
                return r
        raise KeyError((mixer, length))

    def time_ratio(self, mixer: str, short: int, long: int) -> float:
        return self.row(mixer, long).median / self.row(mixer, short).median

    def tsv(self) -> str:
        return "\n".join([BENCH_HEADER] + [r.tsv() for r in self.rows]) + "\n"


def bench_mixers(d_in: int = 64, heads: int = 2, d_h: int = 32, seed: int = 0, dtype=np.float32) -> dict[str, SequenceMixer]:
    """Frozen random Fastformer and self-attention layers of matching width."""
    store = ParamStore(seed, dtype)
    mixers = {
        "fastformer": FastformerLayer(store, "bench.fastformer", d_in, heads, d_h),
        "self_attention": SelfAttentionLayer(store, "bench.self_attention", d_in, heads, d_h),
    }
    # score vectors start at zero; give the benchmark non-trivial weights
    store.randomize(0.1, seed)
    for t in store.tensors():
        t.requires_grad = False
    return mixers


def measure_scaling(
    mixers: Mapping[str, SequenceMixer],
    lengths: Sequence[int],
    trials: int = 5,
    warmup: int = 1,
    seed: int = 0,
    dtype=np.float32,
) -> BenchReport:
    """Time single-threaded forward passes; one warm-up run per cell is discarded."""
    if len(lengths) < 3 or list(lengths) != sorted(lengths):
        raise ValueError("need at least three ascending lengths")
    if trials < 5:
        raise ValueError("need at least five trials")
    rng = np.random.default_rng(seed)
    report = BenchReport(trials=trials)
    with threadpool_limits(limits=1):
        for name, mixer in mixers.items():
            for L in lengths:
                x = Tensor(rng.standard_normal((L, mixer.d_in)).astype(dtype))
                mask = np.ones(L, dtype=bool)
                for _ in range(warmup):
                    mixer.mix(x, mask)
                times = []
                for _ in range(trials):
                    t0 = time.perf_counter()
                    mixer.mix(x, mask)
                    times.append(time.perf_counter() - t0)
                report.rows.append(
                    BenchRow(name, L, statistics.fmean(times), statistics.stdev(times), statistics.median(times), flop_count(mixer, L))
                )
    return report
