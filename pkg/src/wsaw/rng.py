"""Seeded randomness with named streams.

Every stochastic routine takes a SeededSource so that a (seed, stream) pair
pins the full random stream regardless of how many other tasks ran before it.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SeededSource:
    """A (seed, stream) pair mapping to one independent numpy Generator."""

    seed: int
    stream: int = 0

    def __post_init__(self):
        if not (0 <= int(self.seed) < 2**63):
            raise ValueError("seed must lie in [0, 2**63)")
        if int(self.stream) < 0:
            raise ValueError("stream must be non-negative")

    def generator(self) -> np.random.Generator:
        # spawn_key gives independent streams for a shared seed
        ss = np.random.SeedSequence(int(self.seed), spawn_key=(int(self.stream),))
        return np.random.default_rng(ss)

    def with_stream(self, stream: int) -> "SeededSource":
        return SeededSource(self.seed, stream)
