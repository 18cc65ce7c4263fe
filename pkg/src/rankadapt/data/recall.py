"""Recall-channel negative sampling from rank windows.

Three lightweight recall models each impose a full ranking of the catalog;
negatives are drawn from fixed rank windows of those rankings so that the
candidate distribution can be shifted at will between training and test:

  popularity   window [0, 1000)     global training-count order
  mf           window [1000, 2000)  per-user dot-product order
  item2item    window [500, 1500)   similarity order around a recent item

A per-group multinomial over the channel-share vector decides how many of
the 19 negatives each channel contributes. On catalogs smaller than 2000
items the windows are scaled by N/2000, preserving their proportions.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..numerics import Rng
from .interactions import Catalog, GroupSeed, UserSequence
from .sampling import CandidateGroup

NOMINAL_MAX = 2000
WINDOWS = {"pop": (0, 1000), "mf": (1000, 2000), "i2i": (500, 1500)}
CHANNELS = ("pop", "mf", "i2i")
RECENT_WINDOW = 5  # anchor item drawn from the last 5 history items


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


@dataclass
class RecallIndex:
    items: np.ndarray               # catalog item ids, ascending
    pop_order: np.ndarray           # item ids by (-popularity, id)
    user_ids: np.ndarray
    user_vecs: np.ndarray           # (U, d) matrix-factorization user factors
    item_vecs: np.ndarray           # (N, d) matrix-factorization item factors
    i2i_vecs: np.ndarray            # (N, d) skip-gram item embeddings
    _user_row: dict = field(default_factory=dict)
    _item_row: dict = field(default_factory=dict)
    _mf_cache: dict = field(default_factory=dict)
    _i2i_cache: dict = field(default_factory=dict)

    def __post_init__(self):
        self._user_row = {int(u): i for i, u in enumerate(self.user_ids)}
        self._item_row = {int(it): i for i, it in enumerate(self.items)}

    def mf_ranking(self, user: int) -> np.ndarray:
        """All catalog items by descending user-item dot product, id tiebreak."""
        cached = self._mf_cache.get(user)
        if cached is not None:
            return cached
        row = self._user_row.get(user)
        if row is None:
            ranking = self.pop_order  # cold user: fall back to popularity
        else:
            scores = self.item_vecs @ self.user_vecs[row]
            order = np.lexsort((self.items, -scores))
            ranking = self.items[order]
        self._mf_cache[user] = ranking
        return ranking

    def i2i_ranking(self, anchor: int) -> np.ndarray:
        cached = self._i2i_cache.get(anchor)
        if cached is not None:
            return cached
        row = self._item_row[anchor]
        v = self.i2i_vecs[row]
        norms = np.linalg.norm(self.i2i_vecs, axis=1) * (np.linalg.norm(v) + 1e-12) + 1e-12
        sims = (self.i2i_vecs @ v) / norms
        order = np.lexsort((self.items, -sims))
        ranking = self.items[order]
        self._i2i_cache[anchor] = ranking
        return ranking


def _train_mf(sequences: list[UserSequence], items: np.ndarray, dim: int,
              rng: Rng, epochs: int = 3, lr: float = 0.05) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Dot-product MF fit with BCE and one uniform negative per positive."""
    item_row = {int(it): i for i, it in enumerate(items)}
    user_ids = np.asarray([s.user for s in sequences])
    users, pos = [], []
    for ui, seq in enumerate(sequences):
        for item in seq.items[:len(seq.items) - 2]:
            users.append(ui)
            pos.append(item_row[item])
    users = np.asarray(users)
    pos = np.asarray(pos)
    U = rng.substream("mf", "user-init").gaussian((len(sequences), dim), std=0.1)
    V = rng.substream("mf", "item-init").gaussian((len(items), dim), std=0.1)
    n = len(users)
    for epoch in range(epochs):
        ep = rng.substream("mf", "epoch", epoch)
        perm = ep.permutation(n)
        negs = ep.randint(0, len(items), n)
        for start in range(0, n, 4096):
            idx = perm[start:start + 4096]
            u, p, q = users[idx], pos[idx], negs[start:start + 4096][: len(idx)]
            for rows, y in ((p, 1.0), (q, 0.0)):
                s = _sigmoid((U[u] * V[rows]).sum(axis=1))
                err = (s - y)[:, None]
                gu = err * V[rows]
                gv = err * U[u]
                np.add.at(U, u, -lr * gu)
                np.add.at(V, rows, -lr * gv)
    return user_ids, U, V


def _train_item2item(sequences: list[UserSequence], items: np.ndarray, dim: int,
                     rng: Rng, epochs: int = 2, lr: float = 0.05,
                     window: int = 5, num_neg: int = 5) -> np.ndarray:
    """Skip-gram with negative sampling over training prefixes."""
    item_row = {int(it): i for i, it in enumerate(items)}
    centers, contexts = [], []
    for seq in sequences:
        train_items = [item_row[i] for i in seq.items[:len(seq.items) - 2]]
        for i, c in enumerate(train_items):
            lo = max(0, i - window)
            hi = min(len(train_items), i + window + 1)
            for j in range(lo, hi):
                if j != i:
                    centers.append(c)
                    contexts.append(train_items[j])
    centers = np.asarray(centers)
    contexts = np.asarray(contexts)
    W = rng.substream("i2i", "in-init").gaussian((len(items), dim), std=0.1)
    C = rng.substream("i2i", "out-init").gaussian((len(items), dim), std=0.1)
    n = len(centers)
    for epoch in range(epochs):
        ep = rng.substream("i2i", "epoch", epoch)
        perm = ep.permutation(n)
        for start in range(0, n, 4096):
            idx = perm[start:start + 4096]
            c, o = centers[idx], contexts[idx]
            s = _sigmoid((W[c] * C[o]).sum(axis=1))
            err = (s - 1.0)[:, None]
            gw = err * C[o]
            np.add.at(C, o, -lr * err * W[c])
            negs = ep.randint(0, len(items), (len(idx), num_neg))
            for k in range(num_neg):
                nk = negs[:, k]
                sn = _sigmoid((W[c] * C[nk]).sum(axis=1))
                errn = sn[:, None]
                gw += errn * C[nk]
                np.add.at(C, nk, -lr * errn * W[c])
            np.add.at(W, c, -lr * gw)
    return W


def build_recall_index(sequences: list[UserSequence], catalog: Catalog, dim: int,
                       rng: Rng) -> RecallIndex:
    counts = catalog.popularity_of(catalog.items)
    order = np.lexsort((catalog.items, -counts))
    pop_order = catalog.items[order]
    user_ids, U, V = _train_mf(sequences, catalog.items, dim, rng.substream("recall"))
    i2i = _train_item2item(sequences, catalog.items, dim, rng.substream("recall"))
    return RecallIndex(items=catalog.items, pop_order=pop_order,
                       user_ids=user_ids, user_vecs=U, item_vecs=V, i2i_vecs=i2i)


def scaled_window(channel: str, num_items: int) -> tuple[int, int]:
    lo, hi = WINDOWS[channel]
    if num_items < NOMINAL_MAX:
        lo = (lo * num_items) // NOMINAL_MAX
        hi = (hi * num_items) // NOMINAL_MAX
        hi = min(max(hi, lo + 1), num_items)
    return lo, hi


def recall_sample_negatives(rng: Rng, seed_user: int, positive: int,
                            history: tuple[int, ...], index: RecallIndex,
                            d_vec, k: int = 19) -> list[int]:
    """Draw k negatives allocated to channels by multinomial(k, d_vec)."""
    counts = rng.multinomial(k, d_vec)
    n = len(index.items)
    chosen: list[int] = []
    taken = {positive}
    shortfall = 0
    for channel, want in zip(CHANNELS, counts):
        want = int(want) + shortfall
        shortfall = 0
        if want == 0:
            continue
        if channel == "pop":
            ranking = index.pop_order
        elif channel == "mf":
            ranking = index.mf_ranking(seed_user)
        else:
            recent = history[-RECENT_WINDOW:]
            anchor = int(recent[int(rng.randint(0, len(recent)))])
            ranking = index.i2i_ranking(anchor)
        lo, hi = scaled_window(channel, n)
        pool = np.asarray([i for i in ranking[lo:hi].tolist() if i not in taken])
        got = min(want, len(pool))
        if got > 0:
            picks = rng.choice(pool, size=got, replace=False)
            for item in picks.tolist():
                chosen.append(int(item))
                taken.add(int(item))
        shortfall = want - got
    if shortfall > 0:  # catalog-wide uniform backfill; only on tiny catalogs
        pool = np.asarray([i for i in index.items.tolist() if i not in taken])
        picks = rng.choice(pool, size=shortfall, replace=False)
        chosen.extend(int(i) for i in picks.tolist())
    return chosen


def build_recall_groups(seeds: list[GroupSeed], index: RecallIndex, rng: Rng,
                        d_vec, k: int = 19) -> list[CandidateGroup]:
    d_tag = ",".join(f"{float(x):g}" for x in d_vec)
    provenance = f"recall({d_tag})"
    groups = []
    for seed in seeds:
        sub = rng.substream("recall-sample", d_tag, seed.slot, seed.user, seed.t)
        negs = recall_sample_negatives(sub, seed.user, seed.positive, seed.history,
                                       index, d_vec, k)
        groups.append(CandidateGroup(seed.user, seed.history, seed.positive,
                                     tuple(negs), provenance))
    return groups
