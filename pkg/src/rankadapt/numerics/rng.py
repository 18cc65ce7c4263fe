"""Seeded random draws via keyed Philox substreams.

Every random decision in the package goes through an `Rng`. A substream is
addressed by (global seed, purpose tag, ids...), so draws are reproducible
and independent of the order in which other substreams are consumed: asking
for substream("mixer", 7, 3) always yields the same stream no matter what
was sampled before.
"""
from __future__ import annotations

import hashlib

import numpy as np

ALGORITHM = "philox4x64"

_MASK64 = (1 << 64) - 1


def _part_to_int(part) -> int:
    if isinstance(part, (bool, np.bool_)):
        return int(part)
    if isinstance(part, (int, np.integer)):
        return int(part) & _MASK64
    if isinstance(part, str):
        digest = hashlib.sha256(part.encode("utf-8")).digest()
        return int.from_bytes(digest[:8], "little")
    if isinstance(part, float):
        # floats may appear in distribution vectors used as keys; hash the repr
        return _part_to_int(repr(part))
    raise TypeError(f"cannot key a substream with {type(part).__name__}")


class Rng:
    """One substream of the global Philox family."""

    def __init__(self, seed: int, _key: tuple = ()):
        self.seed = int(seed)
        self._key = tuple(_key)
        self._gen: np.random.Generator | None = None

    def substream(self, *key_parts) -> "Rng":
        """A child stream addressed by additional key parts."""
        return Rng(self.seed, self._key + key_parts)

    @property
    def generator(self) -> np.random.Generator:
        if self._gen is None:
            entropy = [self.seed & _MASK64] + [_part_to_int(p) for p in self._key]
            ss = np.random.SeedSequence(entropy)
            self._gen = np.random.Generator(np.random.Philox(ss))
        return self._gen

    # -- draw kinds ----------------------------------------------------
    def gaussian(self, shape=(), mean: float = 0.0, std: float = 1.0) -> np.ndarray:
        return self.generator.normal(mean, std, size=shape)

    def uniform(self, shape=(), low: float = 0.0, high: float = 1.0) -> np.ndarray:
        return self.generator.uniform(low, high, size=shape)

    def bernoulli(self, p: float, shape=()) -> np.ndarray:
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"bernoulli p out of range: {p}")
        return (self.generator.uniform(size=shape) < p)

    def randint(self, low: int, high: int, shape=()) -> np.ndarray:
        return self.generator.integers(low, high, size=shape)

    def multinomial(self, n: int, pvals) -> np.ndarray:
        p = _validated_probs(pvals)
        counts = self.generator.multinomial(n, p)
        assert counts.sum() == n
        return counts

    def categorical(self, pvals) -> int:
        p = _validated_probs(pvals)
        return int(self.generator.choice(len(p), p=p))

    def choice(self, pool, size: int, replace: bool = False, p=None) -> np.ndarray:
        pool = np.asarray(pool)
        if p is not None:
            p = _validated_probs(p)
        return self.generator.choice(pool, size=size, replace=replace, p=p)

    def permutation(self, n_or_array) -> np.ndarray:
        return self.generator.permutation(n_or_array)


def _validated_probs(pvals) -> np.ndarray:
    p = np.asarray(pvals, dtype=np.float64)
    if p.ndim != 1:
        raise ValueError("probability vector must be 1-D")
    if (p < 0).any():
        raise ValueError("probabilities must be nonnegative")
    total = p.sum()
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"probabilities must sum to 1 (got {total!r})")
    # renormalise exactly so numpy's own tolerance never trips
    return p / total


def normalized(weights) -> np.ndarray:
    """Turn nonnegative weights into a probability vector (uniform if all zero)."""
    w = np.asarray(weights, dtype=np.float64)
    if (w < 0).any():
        raise ValueError("weights must be nonnegative")
    total = w.sum()
    if total <= 0:
        return np.full(len(w), 1.0 / len(w))
    return w / total
