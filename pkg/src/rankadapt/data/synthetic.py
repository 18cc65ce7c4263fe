"""Synthetic interaction corpus with controllable category structure.

Each user gets a Dirichlet(alpha) preference over categories; within a
category, item popularity follows a Zipf(s) profile over a per-category
rank order. Small alpha concentrates users on few categories (strong
adaptation signal); s=0 makes within-category choice uniform.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..numerics import Rng
from .interactions import Interaction


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SyntheticConfig:
    num_users: int = 2000
    num_items: int = 500
    num_categories: int = 10
    dirichlet_alpha: float = 0.3
    zipf_s: float = 1.0
    seq_len_min: int = 12
    seq_len_max: int = 30
    second_category_prob: float = 0.3

    def validate(self) -> None:
        if self.num_items < 20 * self.num_categories:
            raise ConfigError(
                f"infeasible corpus: num_items={self.num_items} < "
                f"20 * num_categories={20 * self.num_categories}"
            )
        if self.seq_len_min < 10:
            raise ConfigError("seq_len_min must be >= 10 (shorter users are dropped)")
        if self.seq_len_max < self.seq_len_min:
            raise ConfigError("seq_len_max < seq_len_min")
        if self.num_users < 1 or self.num_categories < 1:
            raise ConfigError("need at least one user and one category")


def generate_synthetic(cfg: SyntheticConfig, rng: Rng) -> list[Interaction]:
    """Deterministic corpus for a given (config, seed). Item ids are 0..N-1."""
    cfg.validate()
    cat_rng = rng.substream("synthetic", "categories")
    # every category seeded with one item round-robin, the rest uniform
    primary = np.arange(cfg.num_items) % cfg.num_categories
    primary = cat_rng.permutation(primary)
    item_cats: list[tuple[int, ...]] = []
    for item in range(cfg.num_items):
        cats = {int(primary[item])}
        if cfg.num_categories > 1 and bool(cat_rng.bernoulli(cfg.second_category_prob)):
            extra = int(cat_rng.randint(0, cfg.num_categories - 1))
            if extra >= primary[item]:
                extra += 1
            cats.add(extra)
        item_cats.append(tuple(sorted(cats)))

    members: dict[int, list[int]] = {c: [] for c in range(cfg.num_categories)}
    for item, cats in enumerate(item_cats):
        for c in cats:
            members[c].append(item)

    # Zipf weights over a shuffled within-category rank order
    weights: dict[int, np.ndarray] = {}
    ordered: dict[int, np.ndarray] = {}
    for c in range(cfg.num_categories):
        pool = np.asarray(members[c])
        order = rng.substream("synthetic", "ranks", c).permutation(pool)
        ranks = np.arange(1, len(order) + 1, dtype=np.float64)
        w = ranks ** (-cfg.zipf_s)
        weights[c] = w / w.sum()
        ordered[c] = order

    records: list[Interaction] = []
    for user in range(cfg.num_users):
        u_rng = rng.substream("synthetic", "user", user)
        prefs = u_rng.generator.dirichlet(np.full(cfg.num_categories, cfg.dirichlet_alpha))
        length = int(u_rng.randint(cfg.seq_len_min, cfg.seq_len_max + 1))
        for ts in range(length):
            cat = int(u_rng.generator.choice(cfg.num_categories, p=prefs))
            item = int(u_rng.generator.choice(ordered[cat], p=weights[cat]))
            records.append(Interaction(user, item, ts, item_cats[item]))
    return records
