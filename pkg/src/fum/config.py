"""Training configuration and the line-based ``key = value`` config format."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields
from pathlib import Path

ABLATIONS = ("full", "fine_only", "coarse_only")
LOSSES = ("log_sigmoid", "paper_sigmoid")
SCORINGS = ("vector", "mlp")


@dataclass(frozen=True)
class TrainConfig:
    """Model and optimization hyperparameters.

    Defaults follow the published setup where it gives one (50 clicked news,
    20 heads of 20 dimensions, 300-dimensional word vectors, Adam at 1e-4 for
    two epochs); the rest are choices of this implementation.
    """

    m: int = 50
    k: int = 4
    l: int = 16
    d: int = 300
    d_genre: int = 32
    d_pos: int = 32
    H: int = 20
    d_h: int = 20
    d_att: int = 200
    fastformer_layers: int = 1
    fastformer_scoring: str = "vector"
    fastformer_residual: bool = False
    pool_scoring: str = "mlp"
    learning_rate: float = 1e-4
    epochs: int = 2
    batch_size: int = 32
    negatives_per_positive: int = 1
    seed: int = 0
    ablation: str = "full"
    loss: str = "log_sigmoid"
    min_count: int = 2

    def __post_init__(self):
        for name in ("m", "k", "l", "d", "H", "d_h", "d_att", "fastformer_layers", "epochs", "batch_size", "negatives_per_positive"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        for name in ("d_genre", "d_pos", "seed"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be non-negative")
        if self.ablation not in ABLATIONS:
            raise ValueError(f"ablation must be one of {ABLATIONS}")
        if self.loss not in LOSSES:
            raise ValueError(f"loss must be one of {LOSSES}")
        if self.fastformer_scoring not in SCORINGS or self.pool_scoring not in SCORINGS:
            raise ValueError(f"scoring must be one of {SCORINGS}")

    @property
    def D(self) -> int:
        return self.H * self.d_h

    @property
    def L(self) -> int:
        return self.m * self.k * self.l

    @property
    def g(self) -> int:
        return self.d + self.d_genre + self.d_pos

    def replace(self, **changes) -> "TrainConfig":
        return dataclasses.replace(self, **changes)


# Small enough for a single CPU; reaches the synthetic accuracy target at the default learning rate.
DESK_CONFIG = TrainConfig(m=10, k=1, l=8, d=64, d_genre=8, d_pos=8, H=8, d_h=8, d_att=64, batch_size=4)


def coerce(value: str, like):
    """Parse ``value`` into the type of the default ``like``."""
    if isinstance(like, bool):
        low = value.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {value!r}")
    if isinstance(like, int):
        return int(value)
    if isinstance(like, float):
        return float(value)
    if isinstance(like, (tuple, list)):
        return tuple(coerce(v, like[0]) for v in value.replace(",", " ").split())
    return value.strip()


def parse_assignments(lines, source: str = "<config>") -> dict[str, str]:
    out = {}
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise ValueError(f"{source}:{lineno}: expected 'key = value'")
        out[key.strip()] = value.strip()
    return out


def read_config_file(path) -> dict[str, str]:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"config file not found: {path}")
    return parse_assignments(path.read_text(encoding="utf-8").splitlines(), str(path))


def apply_assignments(base, assignments: dict[str, str]):
    """Return a copy of dataclass ``base`` with string assignments applied.

    Unknown keys and unparseable values raise ``ValueError`` naming the key.
    """
    known = {f.name for f in fields(base)}
    changes = {}
    for key, value in assignments.items():
        if key not in known:
            raise ValueError(f"unknown config key {key!r}")
        try:
            changes[key] = coerce(value, getattr(base, key))
        except ValueError:
            raise ValueError(f"bad value for config key {key!r}: {value!r}") from None
    return dataclasses.replace(base, **changes)
