"""Deterministic random number generation for reproducible fixtures.

Everything that needs randomness at runtime (procedural reference weights,
augmentation schedules, noise fields) draws from splitmix64 so that results
are bit-reproducible for a given seed, independent of platform or library
version. Gaussian variates are derived from the same stream via Box-Muller.
"""

from __future__ import annotations

import math

import numpy as np

_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_MASK = 0xFFFFFFFFFFFFFFFF


def _mix(z: int) -> int:
    z = (z ^ (z >> 30)) * _MIX1 & _MASK
    z = (z ^ (z >> 27)) * _MIX2 & _MASK
    return z ^ (z >> 31)


class SplitMix64:
    """Scalar splitmix64 stream.

    Fast enough for schedules and small arrays; use :func:`uniform_array`
    for bulk draws.
    """

    def __init__(self, seed: int):
        self._state = seed & _MASK

    def next_u64(self) -> int:
        self._state = (self._state + _GOLDEN) & _MASK
        return _mix(self._state)

    def next_float(self) -> float:
        """Uniform in [0, 1) on the 53-bit grid k/2^53."""
        return (self.next_u64() >> 11) * 2.0**-53

    def next_below(self, n: int) -> int:
        """Uniform integer in [0, n) without modulo bias."""
        if n <= 0:
            raise ValueError("n must be positive")
        limit = (_MASK + 1) - (_MASK + 1) % n
        while True:
            u = self.next_u64()
            if u < limit:
                return u % n

    def uniform(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.next_float()

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle."""
        for i in range(len(items) - 1, 0, -1):
            j = self.next_below(i + 1)
            items[i], items[j] = items[j], items[i]

    def spawn(self) -> "SplitMix64":
        """Independent child stream (seeded from this one)."""
        return SplitMix64(self.next_u64())


def uniform_array(seed: int, n: int) -> np.ndarray:
    """Vectorized splitmix64: n uniforms in [0, 1) for stream `seed`.

    Equals the first n outputs of SplitMix64(seed).next_float().
    """
    with np.errstate(over="ignore"):
        state = (np.uint64(seed) + np.arange(1, n + 1, dtype=np.uint64) * np.uint64(_GOLDEN))
        z = state
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
        z = z ^ (z >> np.uint64(31))
    return (z >> np.uint64(11)).astype(np.float64) * 2.0**-53


def normal_array(seed: int, n: int) -> np.ndarray:
    """n standard-normal variates via Box-Muller over splitmix64 uniforms."""
    m = (n + 1) // 2
    u = uniform_array(seed, 2 * m)
    u1 = 1.0 - u[:m]  # avoid log(0)
    u2 = u[m:]
    r = np.sqrt(-2.0 * np.log(u1))
    theta = 2.0 * math.pi * u2
    out = np.concatenate([r * np.cos(theta), r * np.sin(theta)])
    return out[:n]
