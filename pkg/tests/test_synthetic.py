"""Synthetic corpus generator: category structure, popularity profile, limits."""
from collections import Counter

import numpy as np
import pytest
from scipy import stats

from rankadapt.data import ConfigError, SyntheticConfig, generate_synthetic
from rankadapt.numerics import Rng


SMALL = dict(num_users=150, num_items=200, num_categories=5,
             seq_len_min=12, seq_len_max=20)


def test_same_seed_reproduces_corpus():
    cfg = SyntheticConfig(**SMALL)
    assert generate_synthetic(cfg, Rng(7)) == generate_synthetic(cfg, Rng(7))


def test_different_seed_changes_corpus():
    cfg = SyntheticConfig(**SMALL)
    assert generate_synthetic(cfg, Rng(7)) != generate_synthetic(cfg, Rng(8))


def test_basic_shape_invariants():
    cfg = SyntheticConfig(**SMALL)
    recs = generate_synthetic(cfg, Rng(0))
    by_user = {}
    for r in recs:
        by_user.setdefault(r.user, []).append(r)
    assert set(by_user) == set(range(cfg.num_users))
    for u, rows in by_user.items():
        assert cfg.seq_len_min <= len(rows) <= cfg.seq_len_max
        assert [r.timestamp for r in rows] == list(range(len(rows)))
    assert all(0 <= r.item < cfg.num_items for r in recs)
    assert all(1 <= len(r.categories) <= 2 for r in recs)


def test_item_categories_are_consistent_across_interactions():
    recs = generate_synthetic(SyntheticConfig(**SMALL), Rng(3))
    seen = {}
    for r in recs:
        assert seen.setdefault(r.item, r.categories) == r.categories


def test_every_category_has_enough_items():
    cfg = SyntheticConfig(**SMALL, second_category_prob=0.0)
    recs = generate_synthetic(cfg, Rng(1))
    members = {}
    for r in recs:
        members.setdefault(r.categories[0], set()).add(r.item)
    # round-robin primary assignment: every category near num_items/num_categories
    for c in range(cfg.num_categories):
        assert len(members.get(c, ())) > 25


def test_concentrated_alpha_puts_mass_on_modal_category():
    # alpha -> 0 gives near-one-hot user preferences
    cfg = SyntheticConfig(**SMALL, dirichlet_alpha=0.01, second_category_prob=0.0)
    recs = generate_synthetic(cfg, Rng(5))
    by_user = {}
    for r in recs:
        by_user.setdefault(r.user, []).append(r.categories[0])
    shares = []
    for cats in by_user.values():
        top = Counter(cats).most_common(1)[0][1]
        shares.append(top / len(cats))
    assert np.mean(shares) >= 0.90


def test_flat_alpha_spreads_mass_across_categories():
    cfg = SyntheticConfig(**SMALL, dirichlet_alpha=50.0, second_category_prob=0.0)
    recs = generate_synthetic(cfg, Rng(5))
    by_user = {}
    for r in recs:
        by_user.setdefault(r.user, []).append(r.categories[0])
    shares = [Counter(c).most_common(1)[0][1] / len(c) for c in by_user.values()]
    assert np.mean(shares) < 0.55


def test_zipf_zero_is_uniform_within_category():
    cfg = SyntheticConfig(num_users=400, num_items=200, num_categories=5,
                          zipf_s=0.0, dirichlet_alpha=50.0,
                          seq_len_min=15, seq_len_max=25,
                          second_category_prob=0.0)
    recs = generate_synthetic(cfg, Rng(11))
    counts = {}
    cat_of = {}
    for r in recs:
        counts[r.item] = counts.get(r.item, 0) + 1
        cat_of[r.item] = r.categories[0]
    # chi-square uniformity within each category's drawn counts
    for c in range(cfg.num_categories):
        obs = np.asarray([counts.get(i, 0) for i in cat_of
                          if cat_of[i] == c], dtype=float)
        _, p = stats.chisquare(obs)
        assert p > 0.01, f"category {c} rejects uniformity (p={p:.4f})"


def test_zipf_one_concentrates_on_head_items():
    cfg = SyntheticConfig(num_users=400, num_items=200, num_categories=5,
                          zipf_s=1.5, dirichlet_alpha=50.0,
                          seq_len_min=15, seq_len_max=25,
                          second_category_prob=0.0)
    recs = generate_synthetic(cfg, Rng(11))
    counts = Counter(r.item for r in recs)
    total = sum(counts.values())
    top20 = sum(c for _, c in counts.most_common(20))
    assert top20 / total > 0.45  # 10% of items draw nearly half the mass


def test_second_category_probability_endpoints():
    zero = generate_synthetic(SyntheticConfig(**SMALL, second_category_prob=0.0), Rng(2))
    assert all(len(r.categories) == 1 for r in zero)
    full = generate_synthetic(SyntheticConfig(**SMALL, second_category_prob=1.0), Rng(2))
    assert all(len(r.categories) == 2 for r in full)


def test_infeasible_item_count_rejected():
    with pytest.raises(ConfigError, match="infeasible"):
        generate_synthetic(SyntheticConfig(num_items=100, num_categories=10), Rng(0))


def test_short_minimum_length_rejected():
    with pytest.raises(ConfigError, match="seq_len_min"):
        generate_synthetic(SyntheticConfig(**{**SMALL, "seq_len_min": 5}), Rng(0))


def test_inverted_length_bounds_rejected():
    bad = {**SMALL, "seq_len_min": 20, "seq_len_max": 12}
    with pytest.raises(ConfigError):
        generate_synthetic(SyntheticConfig(**bad), Rng(0))
