"""Named parameter storage, initialization and the Adam optimizer."""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from fum.tensor import DEFAULT_DTYPE, Tensor


def glorot_bound(shape: tuple[int, ...]) -> float:
    fan_in, fan_out = shape[0], shape[-1] if len(shape) > 1 else 1
    return float(np.sqrt(6.0 / (fan_in + fan_out)))


class ParamStore:
    """Ordered collection of trainable tensors keyed by hierarchical names.

    Iteration is lexicographic by name, independent of registration order.
    Initial values are drawn from a generator seeded with ``rng_seed`` in
    registration order, so building the same model twice gives identical
    weights.
    """

    def __init__(self, rng_seed: int = 0, dtype=DEFAULT_DTYPE):
        self.rng_seed = int(rng_seed)
        self.dtype = np.dtype(dtype)
        self.rng = np.random.default_rng(self.rng_seed)
        self._entries: dict[str, Tensor] = {}

    def add(self, name: str, value) -> Tensor:
        if name in self._entries:
            raise KeyError(f"duplicate parameter name {name!r}")
        t = Tensor(np.array(value, dtype=self.dtype), requires_grad=True)
        self._entries[name] = t
        return t

    def param(self, name: str, shape: tuple[int, ...], init: str = "glorot") -> Tensor:
        """Return the parameter called ``name``, creating it if absent."""
        shape = tuple(int(s) for s in shape)
        if name in self._entries:
            existing = self._entries[name]
            if existing.shape != shape:
                raise ValueError(f"parameter {name!r} has shape {existing.shape}, expected {shape}")
            return existing
        if any(s <= 0 for s in shape):
            raise ValueError(f"parameter {name!r} needs positive extents, got {shape}")
        if init == "glorot":
            r = glorot_bound(shape)
            value = self.rng.uniform(-r, r, size=shape)
        elif init == "zeros":
            value = np.zeros(shape)
        else:
            raise ValueError(f"unknown initializer {init!r}")
        return self.add(name, value)

    def __getitem__(self, name: str) -> Tensor:
        return self._entries[name]

    def __contains__(self, name: str) -> bool:
        return name in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self) -> Iterator[str]:
        return iter(sorted(self._entries))

    def names(self) -> list[str]:
        return sorted(self._entries)

    def items(self) -> list[tuple[str, Tensor]]:
        return [(n, self._entries[n]) for n in self.names()]

    def tensors(self) -> list[Tensor]:
        return [t for _, t in self.items()]

    def size(self) -> int:
        return sum(t.data.size for t in self._entries.values())

    def zero_grad(self) -> None:
        for t in self._entries.values():
            t.grad = None

    def randomize(self, scale: float = 0.5, seed: int = 0) -> None:
        """Overwrite every entry with uniform noise (gradient checking aid)."""
        rng = np.random.default_rng(seed)
        for _, t in self.items():
            t.data[...] = rng.uniform(-scale, scale, size=t.shape)

    def copy(self) -> "ParamStore":
        return copy.deepcopy(self)

    def values_equal(self, other: "ParamStore") -> bool:
        if self.names() != other.names():
            return False
        return all(np.array_equal(a.data, b.data) for (_, a), (_, b) in zip(self.items(), other.items()))


@dataclass
class AdamState:
    learning_rate: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(params: ParamStore, state: AdamState) -> None:
    """One bias-corrected Adam update in place; clears gradients to zero."""
    items = params.items()
    for name, p in items:
        if p.grad is None:
            raise ValueError(f"parameter {name!r} has no gradient")
    state.step += 1
    t = state.step
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1**t
    c2 = 1.0 - b2**t
    for name, p in items:
        g = p.grad
        m = state.m.get(name)
        if m is None:
            m = state.m[name] = np.zeros_like(p.data)
            state.v[name] = np.zeros_like(p.data)
        v = state.v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        p.data -= state.learning_rate * (m / c1) / (np.sqrt(v / c2) + state.epsilon)
        p.grad = np.zeros_like(p.data)
