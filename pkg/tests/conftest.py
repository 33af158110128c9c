import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

import numpy as np  # noqa: E402

from fum.config import TrainConfig  # noqa: E402
from fum.data import NewsRecord, NewsTable  # noqa: E402
from fum.model import FUM  # noqa: E402

TINY = TrainConfig(m=3, k=2, l=4, d=8, d_genre=3, d_pos=2, H=2, d_h=4, d_att=5)
VOCAB = 20


def random_model(seed=0, config=TINY, scale=0.5):
    """A model with every parameter (zero-initialised ones included) randomised."""
    model = FUM(config.replace(seed=seed), VOCAB)
    model.store.randomize(scale, seed)
    return model


def random_record(rng, k, l, news_id="n", min_len=1):
    tokens = np.zeros((k, l), dtype=np.int64)
    mask = np.zeros((k, l), dtype=bool)
    for j in range(k):
        n = int(rng.integers(min_len, l + 1))
        tokens[j, :n] = rng.integers(2, VOCAB, n)
        mask[j, :n] = True
    return NewsRecord(news_id, tokens, mask)


def random_table(rng, n, k, l):
    return NewsTable([random_record(rng, k, l, f"N{i}") for i in range(n)], k, l)
