"""Per-request adaptation: latent extraction, input and parameter modulation."""
from .adaptor import AdaptorConfig, Diagnostics, RankAdaptor
from .extractor import EXTRACTOR_MODES, DistributionExtractor, LatentState
from .film import INPUT_MODES, InputModulator
from .pool import PARAM_MODES, POOL_TARGETS, PredictorModulator

__all__ = [
    "AdaptorConfig", "Diagnostics", "DistributionExtractor", "EXTRACTOR_MODES",
    "INPUT_MODES", "InputModulator", "LatentState", "PARAM_MODES",
    "POOL_TARGETS", "PredictorModulator", "RankAdaptor",
]
