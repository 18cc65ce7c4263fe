"""Binary cross-entropy over candidate groups."""
from __future__ import annotations

import numpy as np

from .. import numerics as nx

CLAMP = 1e-7


def bce_loss(scores: nx.Tensor, labels: np.ndarray) -> nx.Tensor:
    """Mean BCE over every candidate instance in the batch.

    Scores are clamped to [1e-7, 1 - 1e-7] before the logs, so a perfect
    single-precision prediction still contributes ~1.2e-7 rather than inf.
    """
    p = nx.clip(scores, CLAMP, 1.0 - CLAMP)
    y = nx.constant(np.asarray(labels), like=p)
    return nx.mean(-(y * nx.log(p) + (1.0 - y) * nx.log(1.0 - p)))
