"""
How attention cost grows with sequence length
=============================================

A user's behavior document is long: fifty clicked articles with four text
fields of sixteen tokens each is already 3200 tokens.  Self-attention compares
every token with every other one, while the Fastformer mixer summarises the
sequence into a global query and key and touches each token a fixed number of
times.  This script counts the arithmetic of both and then times them.
"""

import numpy as np

from fum.bench import bench_mixers, measure_scaling
from fum.layers import flop_count

mixers = bench_mixers(d_in=64, heads=2, d_h=32)

# Exact operation counts.  Doubling L doubles the Fastformer count and
# roughly quadruples the self-attention count once the L^2 terms dominate.
lengths = [256, 512, 1024, 2048, 4096]
for name, mixer in mixers.items():
    counts = np.array([flop_count(mixer, L) for L in lengths], dtype=float)
    print(name, "count(2L)/count(L):", np.round(counts[1:] / counts[:-1], 3))

# Wall clock, single-threaded, median of five runs per length.
report = measure_scaling(mixers, [512, 1024, 2048], trials=5)
print(report.tsv())
for name in mixers:
    print(name, "time(2048)/time(1024): %.2f" % report.time_ratio(name, 1024, 2048))
