"""Seeded, portable random number generation.

All randomness in the library flows through :class:`SeededRng`, a thin wrapper
over the Philox 4x64 counter-based bit generator.  Philox output is a pure
function of (key, counter), so streams are reproducible across platforms and
processes.  Named child streams (``child("mask")`` etc.) let one user-facing
seed drive several independent draws without correlation.

Derived quantities are built from raw 64-bit words with explicitly coded
algorithms (rejection sampling for bounded ints, 53-bit mantissa for uniforms,
Fisher-Yates for permutations) rather than through numpy Generator methods,
so the streams do not depend on numpy's version-to-version method choices.
"""
from __future__ import annotations

import hashlib

import numpy as np

_U64 = np.uint64
_MASK64 = _U64(0xFFFFFFFFFFFFFFFF)


def _tag_word(tag: str) -> int:
    digest = hashlib.blake2b(tag.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


class SeededRng:
    """Deterministic stream of random values for one (seed, tag) pair."""

    def __init__(self, seed: int, tag: str = ""):
        self.seed = int(seed)
        self.tag = tag
        key = np.array([self.seed & 0xFFFFFFFFFFFFFFFF, _tag_word(tag)], dtype=_U64)
        self._bg = np.random.Philox(key=key)
        self._buf = np.empty(0, dtype=_U64)
        self._pos = 0

    def child(self, tag: str) -> "SeededRng":
        """Independent stream derived from the same seed."""
        return SeededRng(self.seed, f"{self.tag}/{tag}" if self.tag else tag)

    # -- raw words ----------------------------------------------------------

    def raw64(self, n: int) -> np.ndarray:
        out = np.empty(n, dtype=_U64)
        filled = 0
        while filled < n:
            if self._pos >= len(self._buf):
                self._buf = self._bg.random_raw(max(256, n - filled))
                self._pos = 0
            take = min(n - filled, len(self._buf) - self._pos)
            out[filled:filled + take] = self._buf[self._pos:self._pos + take]
            self._pos += take
            filled += take
        return out

    def _next64(self) -> int:
        if self._pos >= len(self._buf):
            self._buf = self._bg.random_raw(256)
            self._pos = 0
        w = int(self._buf[self._pos])
        self._pos += 1
        return w

    # -- derived draws --------------------------------------------------------

    def below(self, n: int) -> int:
        """Uniform integer in [0, n) via rejection sampling (no modulo bias)."""
        if n <= 0:
            raise ValueError("below() needs n >= 1")
        span = (1 << 64) - ((1 << 64) % n)
        while True:
            w = self._next64()
            if w < span:
                return w % n

    def uniform(self, shape=None) -> np.ndarray | float:
        """float64 uniforms in [0, 1) using the top 53 bits of each word."""
        if shape is None:
            return float(self._next64() >> 11) * 2.0 ** -53
        n = int(np.prod(shape))
        words = self.raw64(n)
        vals = (words >> _U64(11)).astype(np.float64) * 2.0 ** -53
        return vals.reshape(shape)

    def normal(self, shape) -> np.ndarray:
        """Box-Muller normals; fully specified, no ziggurat dependence."""
        n = int(np.prod(shape))
        m = (n + 1) // 2
        u1 = np.asarray(self.uniform(m), dtype=np.float64)
        u2 = np.asarray(self.uniform(m), dtype=np.float64)
        r = np.sqrt(-2.0 * np.log(1.0 - u1))  # 1-u1 in (0,1] avoids log(0)
        z = np.concatenate([r * np.cos(2.0 * np.pi * u2), r * np.sin(2.0 * np.pi * u2)])
        return z[:n].reshape(shape)

    def permutation(self, n: int) -> np.ndarray:
        """Fisher-Yates shuffle of arange(n)."""
        a = np.arange(n, dtype=np.int64)
        for i in range(n - 1, 0, -1):
            j = self.below(i + 1)
            a[i], a[j] = a[j], a[i]
        return a

    def bernoulli(self, p: float, shape) -> np.ndarray:
        """Boolean array, True with probability p per element."""
        return np.asarray(self.uniform(shape)) < p
