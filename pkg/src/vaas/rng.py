"""SplitMix64 generator, pinned so every run reproduces identical streams."""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15


def _mix(z: int) -> int:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & _MASK
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & _MASK
    return z ^ (z >> 31)


class SplitMix64:
    """Scalar SplitMix64; state advances by the 64-bit golden gamma."""

    def __init__(self, seed: int):
        self._state = seed & _MASK

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK
        return _mix(self._state)

    def next_signed_unit(self) -> float:
        """Uniform in [-1, 1) from the top 24 bits."""
        z = self.next_u64()
        return ((z >> 40) / (1 << 24)) * 2.0 - 1.0

    def next_unit(self) -> float:
        """Uniform in [0, 1) from the top 24 bits."""
        return (self.next_u64() >> 40) / (1 << 24)


def fill_u64(seed: int, n: int) -> np.ndarray:
    """First n outputs of SplitMix64(seed), vectorised."""
    states = (np.uint64(seed & _MASK)
              + np.uint64(_GAMMA) * np.arange(1, n + 1, dtype=np.uint64))
    z = states
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def fill_signed_unit(seed: int, n: int) -> np.ndarray:
    """First n uniform [-1, 1) draws, matching SplitMix64.next_signed_unit."""
    z = fill_u64(seed, n)
    return ((z >> np.uint64(40)).astype(np.float64) / (1 << 24)) * 2.0 - 1.0
