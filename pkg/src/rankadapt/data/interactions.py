"""Interaction logs, user sequences, and the leave-one-out split.

The on-disk format is a four-column TSV:

    user_id <TAB> item_id <TAB> timestamp <TAB> cat1,cat2,...

Lines starting with '#' are provenance comments and are skipped. Item ids
double as embedding rows downstream, so they are expected to be dense
nonnegative integers.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np


class DataError(ValueError):
    """Malformed input data; message carries the offending line number."""


@dataclass(frozen=True)
class Interaction:
    user: int
    item: int
    timestamp: int
    categories: tuple[int, ...]


@dataclass(frozen=True)
class UserSequence:
    """One user's interactions in time order (stable under timestamp ties)."""
    user: int
    items: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.items)


def load_interactions(path) -> list[Interaction]:
    records: list[Interaction] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 4:
                raise DataError(f"line {lineno}: expected 4 tab-separated fields, got {len(parts)}")
            try:
                user = int(parts[0])
                item = int(parts[1])
                ts = int(parts[2])
            except ValueError as exc:
                raise DataError(f"line {lineno}: non-integer field ({exc})") from None
            if user < 0 or item < 0:
                raise DataError(f"line {lineno}: negative id")
            if not parts[3]:
                raise DataError(f"line {lineno}: empty category list")
            try:
                cats = tuple(int(c) for c in parts[3].split(","))
            except ValueError:
                raise DataError(f"line {lineno}: bad category list {parts[3]!r}") from None
            records.append(Interaction(user, item, ts, cats))
    return records


def write_interactions(path, records: Iterable[Interaction], header_lines: Iterable[str] = ()) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for h in header_lines:
            fh.write(f"# {h}\n")
        for r in records:
            cats = ",".join(str(c) for c in r.categories)
            fh.write(f"{r.user}\t{r.item}\t{r.timestamp}\t{cats}\n")


def build_sequences(records: list[Interaction], min_len: int = 10) -> list[UserSequence]:
    """Group by user, sort by timestamp (stable), drop short users.

    Users with fewer than `min_len` interactions are removed entirely.
    Output is ordered by user id for determinism.
    """
    by_user: dict[int, list[Interaction]] = {}
    for r in records:
        by_user.setdefault(r.user, []).append(r)
    sequences = []
    for user in sorted(by_user):
        recs = sorted(by_user[user], key=lambda r: r.timestamp)  # stable
        if len(recs) < min_len:
            continue
        sequences.append(UserSequence(user, tuple(r.item for r in recs)))
    return sequences


@dataclass(frozen=True)
class GroupSeed:
    """A (history, positive) pair before negatives are attached.

    `slot` identifies the split position: "train" seeds also carry the
    1-based prefix index `t` (the positive is the t-th item).
    """
    user: int
    history: tuple[int, ...]
    positive: int
    slot: str
    t: int = 0


@dataclass
class Split:
    train: list[GroupSeed]
    valid: list[GroupSeed]
    test: list[GroupSeed]


def leave_one_out_split(sequences: list[UserSequence], max_seq_len: int = 50,
                        max_train_targets_per_user: int = 0) -> Split:
    """Last item -> test, second-to-last -> valid, the rest -> training targets.

    For a length-n sequence the training positives are items 2..n-2 (1-based),
    i.e. n-3 of them, each paired with the full preceding prefix truncated to
    the most recent `max_seq_len` items. `max_train_targets_per_user` > 0
    keeps only that many of the most recent training targets per user.
    """
    train: list[GroupSeed] = []
    valid: list[GroupSeed] = []
    test: list[GroupSeed] = []
    for seq in sequences:
        items = seq.items
        n = len(items)
        if n < 4:
            raise DataError(f"user {seq.user}: sequence too short to split ({n})")
        ts = range(2, n - 1)  # 1-based target indices 2..n-2
        if max_train_targets_per_user > 0:
            ts = list(ts)[-max_train_targets_per_user:]
        for t in ts:
            hist = items[:t - 1][-max_seq_len:]
            train.append(GroupSeed(seq.user, hist, items[t - 1], "train", t))
        valid.append(GroupSeed(seq.user, items[:n - 2][-max_seq_len:], items[n - 2], "valid"))
        test.append(GroupSeed(seq.user, items[:n - 1][-max_seq_len:], items[n - 1], "test"))
    return Split(train, valid, test)


@dataclass
class Catalog:
    """Item metadata needed by the samplers.

    Popularity counts come from the training region only (positions
    1..n-2 of each kept sequence), so held-out positives leak nothing.
    """
    items: np.ndarray                         # sorted unique item ids
    categories: dict[int, tuple[int, ...]]    # item -> category ids
    popularity: dict[int, int]                # item -> training count
    by_category: dict[int, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if not self.by_category:
            members: dict[int, list[int]] = {}
            for item in self.items.tolist():
                for c in self.categories[item]:
                    members.setdefault(c, []).append(item)
            self.by_category = {c: np.asarray(sorted(v)) for c, v in members.items()}

    @property
    def num_items(self) -> int:
        return len(self.items)

    def popularity_of(self, items: np.ndarray) -> np.ndarray:
        return np.asarray([self.popularity.get(int(i), 0) for i in items], dtype=np.float64)


def build_catalog(records: list[Interaction], sequences: list[UserSequence]) -> Catalog:
    """Catalog over every item seen in the log; popularity from train prefixes."""
    categories: dict[int, tuple[int, ...]] = {}
    for r in records:
        cats = tuple(sorted(set(r.categories)))
        prev = categories.get(r.item)
        if prev is None:
            categories[r.item] = cats
        elif prev != cats:
            # keep the union; category sets for an item should be consistent
            categories[r.item] = tuple(sorted(set(prev) | set(cats)))
    popularity: dict[int, int] = {}
    for seq in sequences:
        for item in seq.items[:len(seq.items) - 2]:
            popularity[item] = popularity.get(item, 0) + 1
    items = np.asarray(sorted(categories))
    return Catalog(items=items, categories=categories, popularity=popularity)
