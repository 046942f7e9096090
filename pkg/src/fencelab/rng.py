"""SplitMix64 stream; small, portable and bit-reproducible."""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1


class SplitMix64:
    def __init__(self, seed: int):
        self.state = int(seed) & _MASK

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def uniform(self, lo: float = 0.0, hi: float = 1.0) -> float:
        """Float in ``[lo, hi)`` from the top 53 bits."""
        return lo + (hi - lo) * ((self.next_u64() >> 11) * 2.0**-53)

    def below(self, n: int) -> int:
        return self.next_u64() % n

    def shuffle(self, items: np.ndarray) -> np.ndarray:
        """Fisher-Yates shuffle of a copy of ``items``."""
        items = np.asarray(items)
        out = items.tolist()
        for i in range(len(out) - 1, 0, -1):
            j = self.below(i + 1)
            out[i], out[j] = out[j], out[i]
        return np.array(out, dtype=items.dtype)
