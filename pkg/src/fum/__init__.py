"""Fine-grained and fast user modeling for news recommendation."""

from fum.config import DESK_CONFIG, TrainConfig
from fum.model import FUM

__all__ = ["FUM", "TrainConfig", "DESK_CONFIG"]
__version__ = "0.1.0"
