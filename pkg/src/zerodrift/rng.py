"""Portable counter-based random numbers.

Every random quantity in the package comes from SplitMix64 evaluated at an
integer counter, so a given ``(seed, counter)`` pair maps to the same 64-bit
word on any platform and in any language:

    x  = seed + (counter + 1) * 0x9E3779B97F4A7C15        (mod 2**64)
    x  = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9              (mod 2**64)
    x  = (x ^ (x >> 27)) * 0x94D049BB133111EB              (mod 2**64)
    out = x ^ (x >> 31)

Derived draws:

* uniform double in [0, 1):  ``(out >> 11) * 2**-53``
* integer in [0, n), n < 2**32:  ``floor(out * n / 2**64)`` computed exactly
  from 32-bit halves
* standard normal: Box-Muller on two consecutive uniforms,
  ``sqrt(-2 ln(1 - u1)) * cos(2 pi u2)``
* permutation of n items: stable argsort of n consecutive 64-bit words

Because draws are addressed by counter, a block of work (e.g. one bootstrap
replicate) owns a fixed counter range and results never depend on the order
in which blocks are evaluated.
"""

from __future__ import annotations

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MUL1 = np.uint64(0xBF58476D1CE4E5B9)
_MUL2 = np.uint64(0x94D049BB133111EB)
_MASK64 = (1 << 64) - 1
_MASK32 = np.uint64(0xFFFFFFFF)


def splitmix64(seed: int, counters: np.ndarray) -> np.ndarray:
    """Hash ``counters`` under ``seed``; returns uint64 words of the same shape."""
    c = np.asarray(counters, dtype=np.uint64)
    with np.errstate(over="ignore"):
        x = np.uint64(seed & _MASK64) + (c + np.uint64(1)) * _GOLDEN
        x = (x ^ (x >> np.uint64(30))) * _MUL1
        x = (x ^ (x >> np.uint64(27))) * _MUL2
    return x ^ (x >> np.uint64(31))


def derive_seed(seed: int, label: str) -> int:
    """Sub-seed for a named purpose, so unrelated consumers never share a stream."""
    h = 0xCBF29CE484222325
    for byte in label.encode("utf-8"):
        h = ((h ^ byte) * 0x100000001B3) & _MASK64
    word = splitmix64(seed ^ h, np.zeros(1, dtype=np.uint64))[0]
    return int(word)


class CounterRNG:
    """Sequential view over the SplitMix64 counter space.

    Each call consumes a contiguous block of counters, so the same sequence of
    calls on the same seed always yields the same values.
    """

    def __init__(self, seed: int, counter: int = 0):
        self.seed = int(seed) & _MASK64
        self.counter = int(counter)

    def _take(self, n: int) -> np.ndarray:
        start = self.counter
        self.counter += n
        return splitmix64(self.seed, np.arange(start, start + n, dtype=np.uint64))

    def words(self, size) -> np.ndarray:
        shape = (size,) if np.isscalar(size) else tuple(size)
        n = int(np.prod(shape))
        return self._take(n).reshape(shape)

    def uniform(self, size) -> np.ndarray:
        w = self.words(size)
        return (w >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)

    def integers(self, n: int, size) -> np.ndarray:
        """Uniform integers in ``[0, n)``."""
        if not 0 < n < (1 << 32):
            raise ValueError(f"n must be in [1, 2**32), got {n}")
        w = self.words(size)
        nn = np.uint64(n)
        hi = w >> np.uint64(32)
        lo = w & _MASK32
        with np.errstate(over="ignore"):
            mid = hi * nn + ((lo * nn) >> np.uint64(32))
        return (mid >> np.uint64(32)).astype(np.int64)

    def normal(self, size) -> np.ndarray:
        shape = (size,) if np.isscalar(size) else tuple(size)
        n = int(np.prod(shape))
        u = self.uniform(2 * n)
        u1, u2 = u[0::2], u[1::2]
        z = np.sqrt(-2.0 * np.log1p(-u1)) * np.cos(2.0 * np.pi * u2)
        return z.reshape(shape)

    def categorical(self, probs, size) -> np.ndarray:
        """Indices drawn by inverse CDF from ``probs``."""
        cdf = np.cumsum(np.asarray(probs, dtype=np.float64))
        cdf[-1] = 1.0
        u = self.uniform(size)
        return np.searchsorted(cdf, u, side="right").astype(np.int64)

    def permutation_keys(self, shape) -> np.ndarray:
        """Rows of stable-argsorted words; each row is a random permutation."""
        return np.argsort(self.words(shape), axis=-1, kind="stable")
