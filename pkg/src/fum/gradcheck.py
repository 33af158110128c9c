"""Central finite-difference check of analytic gradients."""

from __future__ import annotations

from typing import Callable

import numpy as np

from fum.params import ParamStore
from fum.tensor import Tensor, backward


def finite_difference_check(
    forward: Callable[[], Tensor],
    params: ParamStore,
    eps: float = 1e-4,
    coords_per_param: int | None = 8,
    seed: int = 0,
    floor: float = 0.0,
) -> float:
    """Max relative error between backprop and central differences.

    ``forward`` must rebuild the scalar loss from the current parameter
    values each time it is called.  Up to ``coords_per_param`` coordinates are
    sampled from every parameter (all of them when ``None``).  The error of a
    coordinate is ``|a - c| / max(|a| + |c|, floor, 1e-12)``.

    A positive ``floor`` stops coordinates whose true gradient lies below the
    resolution of central differences (about ``1e-16 * |loss| / eps``) from
    reporting pure rounding noise as a large relative error.
    """
    rng = np.random.default_rng(seed)
    params.zero_grad()
    loss = forward()
    backward(loss, params.tensors())
    worst = 0.0
    for _, t in params.items():
        analytic = t.grad.copy()
        flat = t.data.reshape(-1)
        n = flat.size
        if coords_per_param is None or coords_per_param >= n:
            idx = np.arange(n)
        else:
            idx = rng.choice(n, size=coords_per_param, replace=False)
        for i in idx:
            orig = flat[i]
            flat[i] = orig + eps
            up = forward().item()
            flat[i] = orig - eps
            down = forward().item()
            flat[i] = orig
            central = (up - down) / (2.0 * eps)
            a = analytic.reshape(-1)[i]
            err = abs(a - central) / max(abs(a) + abs(central), floor, 1e-12)
            worst = max(worst, err)
    params.zero_grad()
    return worst
