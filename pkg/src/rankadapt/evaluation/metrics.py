"""Within-group ranking metrics.

Each evaluated group has exactly one positive among m candidates. GAUC is
the fraction of negatives ranked strictly below the positive, ties counted
half. NDCG uses the full candidate list: with the positive at rank r
(descending score, ties broken by ascending item id), the gain is
1 / log2(r + 1).
"""
from __future__ import annotations

import numpy as np


def group_auc(scores, labels) -> float:
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels)
    pos = np.flatnonzero(y == 1)
    if len(pos) != 1:
        raise ValueError(f"group must contain exactly one positive, got {len(pos)}")
    ps = s[pos[0]]
    neg = s[y == 0]
    if len(neg) == 0:
        raise ValueError("group has no negatives")
    below = (neg < ps).sum()
    ties = (neg == ps).sum()
    return float((below + 0.5 * ties) / len(neg))


def positive_rank(scores, item_ids, labels) -> int:
    """1-based rank of the positive: descending score, item id breaks ties."""
    s = np.asarray(scores, dtype=np.float64)
    ids = np.asarray(item_ids)
    y = np.asarray(labels)
    pos = np.flatnonzero(y == 1)
    if len(pos) != 1:
        raise ValueError(f"group must contain exactly one positive, got {len(pos)}")
    order = np.lexsort((ids, -s))
    return int(np.flatnonzero(order == pos[0])[0]) + 1


def group_ndcg(scores, item_ids, labels) -> float:
    rank = positive_rank(scores, item_ids, labels)
    return float(1.0 / np.log2(rank + 1.0))
