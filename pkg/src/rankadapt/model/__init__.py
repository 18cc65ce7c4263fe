"""Base ranking model components."""
from .base import (
    AttentionEncoder,
    BaseRanker,
    GroupBatch,
    GruEncoder,
    ModelConfig,
    Predictor,
)

__all__ = ["AttentionEncoder", "BaseRanker", "GroupBatch", "GruEncoder",
           "ModelConfig", "Predictor"]
