"""Seedable random state shared by every randomized operation.

Thin wrapper over random.Random so the whole pipeline draws from one
documented generator: identical seed + identical draw sequence gives
identical outputs regardless of platform.
"""
from __future__ import annotations

import random

_MASK64 = (1 << 64) - 1


class RngState:
    """Deterministic pseudo-random handle, seeded with a 64-bit integer.

    Single-owner: callers wanting parallelism create one state per worker,
    each with a distinct seed (see derive_seed).
    """

    def __init__(self, seed: int):
        self.seed = seed & _MASK64
        self._gen = random.Random(self.seed)

    def randint(self, lo: int, hi: int) -> int:
        """Uniform integer in [lo, hi], both ends inclusive."""
        if hi < lo:
            raise ValueError(f"empty integer range [{lo}, {hi}]")
        return self._gen.randint(lo, hi)

    def uniform(self, lo: float, hi: float) -> float:
        return self._gen.uniform(lo, hi)

    def random(self) -> float:
        return self._gen.random()

    def bernoulli(self, p: float) -> bool:
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"probability out of [0, 1]: {p}")
        return self._gen.random() < p

    def choice(self, seq):
        if not seq:
            raise ValueError("cannot choose from an empty sequence")
        return seq[self._gen.randrange(len(seq))]

    def shuffle(self, items: list) -> None:
        self._gen.shuffle(items)


def derive_seed(seed: int, index: int) -> int:
    """Per-item seed: XOR keeps parallel workers deterministic regardless of scheduling."""
    return (seed ^ index) & _MASK64
