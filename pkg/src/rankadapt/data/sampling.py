"""Candidate groups and the category-mixer negative sampler.

A candidate group is 1 positive plus 19 sampled negatives, all scored and
ranked together. The mixer controls each group's category makeup so that
candidate distributions vary from request to request:

  1. draw d uniformly from {1, 2, 3} = number of categories involved;
  2. the involved set is one of the positive's own categories plus d-1
     other distinct categories drawn uniformly;
  3. one Bernoulli(0.5) trial decides, for the whole group, whether items
     are drawn popularity-proportionally or uniformly within category;
  4. the budget of 19 negatives is split near-evenly, remainder going to
     the positive's category first (d=3 gives 7/6/6);
  5. draws are without replacement, never equal to the positive; if a
     category runs out of distinct items the shortfall moves to the other
     involved categories and finally to a uniform catalog backfill.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..numerics import Rng, normalized
from .interactions import Catalog, GroupSeed


@dataclass(frozen=True)
class CandidateGroup:
    user: int
    history: tuple[int, ...]
    positive: int
    negatives: tuple[int, ...]
    provenance: str

    @property
    def items(self) -> tuple[int, ...]:
        return (self.positive,) + self.negatives

    @property
    def labels(self) -> tuple[int, ...]:
        return (1,) + (0,) * len(self.negatives)


def _split_budget(k: int, d: int) -> list[int]:
    base, rem = divmod(k, d)
    return [base + (1 if i < rem else 0) for i in range(d)]


def mixer_sample_negatives(rng: Rng, positive: int, catalog: Catalog, k: int = 19,
                           forbidden=()) -> list[int]:
    """Sample k distinct negatives for one group, per the mixer recipe.

    `forbidden` items (beyond the positive) are never drawn; with the default
    empty set the draw sequence is unchanged.
    """
    if catalog.num_items < k + 1:
        raise ValueError(
            f"catalog has only {catalog.num_items} items; need at least {k + 1}"
        )
    d = int(rng.randint(1, 4))
    own_cats = catalog.categories[positive]
    own = own_cats[int(rng.randint(0, len(own_cats)))] if len(own_cats) > 1 else own_cats[0]
    other_pool = [c for c in sorted(catalog.by_category) if c != own]
    d = min(d, 1 + len(other_pool))
    involved = [own]
    if d > 1:
        picks = rng.choice(np.asarray(other_pool), size=d - 1, replace=False)
        involved.extend(int(c) for c in picks)
    by_popularity = bool(rng.bernoulli(0.5))

    budgets = _split_budget(k, d)  # positive's category first gets the remainder
    chosen: list[int] = []
    taken = {positive, *forbidden}
    shortfall = 0
    for cat, budget in zip(involved, budgets):
        budget += shortfall
        shortfall = 0
        pool = np.asarray([i for i in catalog.by_category[cat] if i not in taken])
        n = min(budget, len(pool))
        if n > 0:
            if by_popularity:
                probs = normalized(catalog.popularity_of(pool))
                picks = rng.choice(pool, size=n, replace=False, p=probs)
            else:
                picks = rng.choice(pool, size=n, replace=False)
            for item in picks.tolist():
                chosen.append(int(item))
                taken.add(int(item))
        shortfall = budget - n
    if shortfall > 0:  # uniform backfill across the whole catalog
        pool = np.asarray([i for i in catalog.items.tolist() if i not in taken])
        if len(pool) < shortfall:
            raise ValueError(
                f"catalog too small to draw {k} distinct negatives "
                f"({len(pool)} unseen items left for a shortfall of {shortfall})"
            )
        picks = rng.choice(pool, size=shortfall, replace=False)
        for item in picks.tolist():
            chosen.append(int(item))
            taken.add(int(item))
    return chosen


def build_mixer_groups(seeds: list[GroupSeed], catalog: Catalog, rng: Rng,
                       k: int = 19, seen=None) -> list[CandidateGroup]:
    """One group per seed; each seed gets its own substream keyed by (slot, user, t).

    `seen` optionally maps user -> set of interacted items to exclude from
    that user's negatives (off by default; the positive is always excluded).
    """
    groups = []
    for seed in seeds:
        sub = rng.substream("mixer", seed.slot, seed.user, seed.t)
        forbidden = seen.get(seed.user, ()) if seen else ()
        negs = mixer_sample_negatives(sub, seed.positive, catalog, k, forbidden)
        groups.append(CandidateGroup(seed.user, seed.history, seed.positive,
                                     tuple(negs), "mixer"))
    return groups


# ---------------------------------------------------------------------------
# group file round-trip
# ---------------------------------------------------------------------------

def write_groups(path, groups: list[CandidateGroup], header_lines=()) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for h in header_lines:
            fh.write(f"# {h}\n")
        for g in groups:
            negs = ",".join(str(i) for i in g.negatives)
            fh.write(f"{g.user}\t{g.positive}\t{negs}\t{g.provenance}\n")


def read_group_rows(path) -> list[tuple[int, int, tuple[int, ...], str]]:
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 4:
                raise ValueError(f"line {lineno}: expected 4 fields, got {len(parts)}")
            try:
                user = int(parts[0])
                pos = int(parts[1])
                negs = tuple(int(x) for x in parts[2].split(","))
            except ValueError:
                raise ValueError(f"line {lineno}: bad integer field") from None
            rows.append((user, pos, negs, parts[3]))
    return rows


def attach_histories(rows, seeds: list[GroupSeed]) -> list[CandidateGroup]:
    """Re-join saved group rows to their histories.

    The group file format stores no history; prepare writes groups in seed
    order, so the join is by position, verified against (user, positive).
    """
    if len(rows) != len(seeds):
        raise ValueError(f"group file has {len(rows)} rows but split has {len(seeds)} seeds")
    groups = []
    for (user, pos, negs, prov), seed in zip(rows, seeds):
        if user != seed.user or pos != seed.positive:
            raise ValueError(
                f"group file does not match split: row ({user}, {pos}) vs "
                f"seed ({seed.user}, {seed.positive})"
            )
        groups.append(CandidateGroup(user, seed.history, pos, negs, prov))
    return groups


def groups_for_split(split_part: list[GroupSeed], path) -> list[CandidateGroup]:
    return attach_histories(read_group_rows(path), split_part)
