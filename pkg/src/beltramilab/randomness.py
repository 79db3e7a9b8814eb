"""Counter-based per-site random streams and site-value distributions.

Every lattice site n at level j draws from a stream keyed by a 64-bit mix of
(seed, j, n_1, ..., n_d). Generation is therefore independent of evaluation
order and worker count: identical (model, grid, seed) inputs give bitwise
identical fields. Layers with different j are decorrelated by construction
(independent layers; cross-layer dependence never enters any statistic).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ModelError

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_SALT = np.uint64(0xD1B54A32D192ED03)
_U64 = np.uint64(0xFFFFFFFFFFFFFFFF)


def splitmix64(x: np.ndarray) -> np.ndarray:
    """Vectorized splitmix64 finalizer on uint64 arrays (wraps mod 2^64)."""
    z = x + _GOLDEN
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def _as_u64(values) -> np.ndarray:
    return np.asarray(values, dtype=np.int64).astype(np.uint64)


def site_keys(seed: int, level: int, coords) -> np.ndarray:
    """One uint64 key per site from (seed, level, integer coordinates).

    coords is a sequence of broadcast-compatible integer arrays (one per axis);
    signed coordinates are folded through their two's complement image.
    """
    h = splitmix64(np.uint64(seed & 0xFFFFFFFFFFFFFFFF) ^ _SALT)
    h = splitmix64(h ^ _as_u64(level))
    out = None
    for c in coords:
        c64 = _as_u64(c)
        out = splitmix64((h if out is None else out) ^ c64)
    if out is None:
        out = h
    return np.broadcast_arrays(out)[0] if np.ndim(out) else out


def stream_word(keys: np.ndarray, index: int) -> np.ndarray:
    """index-th 64-bit word of each site's stream."""
    return splitmix64(keys + np.uint64(index) * _GOLDEN)


def uniform01(words: np.ndarray) -> np.ndarray:
    """Map uint64 words to doubles in [0, 1) with 53-bit resolution."""
    return (words >> np.uint64(11)).astype(np.float64) * (2.0**-53)


@dataclass(frozen=True)
class Distribution:
    """Per-site value distribution for bump fields.

    kinds: rademacher (+-1 signs), symmetric_disk(r) (uniform on |z| <= r),
    constant(c), degenerate_k(gamma) (distortion K with tail
    P(K > t) = exp(-gamma (t - 1)), modulus (K-1)/(K+1), uniform phase).
    """

    kind: str
    params: tuple = ()

    def __post_init__(self):
        if self.kind not in ("rademacher", "symmetric_disk", "constant", "degenerate_k"):
            raise ModelError(f"unknown distribution kind {self.kind!r}")
        if self.kind == "degenerate_k" and not self.params[0] > 2:
            raise ModelError(f"degenerate_k requires gamma > 2, got {self.params[0]}")

    @property
    def symmetric(self) -> bool:
        return self.kind in ("rademacher", "symmetric_disk")

    def sample(self, keys: np.ndarray) -> np.ndarray:
        if self.kind == "rademacher":
            bit = (stream_word(keys, 0) >> np.uint64(63)).astype(np.float64)
            return (1.0 - 2.0 * bit).astype(np.complex128)
        if self.kind == "symmetric_disk":
            r = self.params[0]
            u = uniform01(stream_word(keys, 0))
            v = uniform01(stream_word(keys, 1))
            return r * np.sqrt(u) * np.exp(2j * np.pi * v)
        if self.kind == "constant":
            return np.full(np.shape(keys), self.params[0], dtype=np.complex128)
        eps, _, _ = self.sample_degenerate(keys, k_cap=np.inf)
        return eps

    def sample_degenerate(self, keys: np.ndarray, k_cap: float):
        """Degenerate-model draws: (epsilon, clamped K, clamp count)."""
        if self.kind != "degenerate_k":
            raise ModelError("sample_degenerate requires a degenerate_k distribution")
        gamma = self.params[0]
        u = uniform01(stream_word(keys, 0))
        v = uniform01(stream_word(keys, 1))
        k = 1.0 - np.log1p(-u) / gamma
        clamped = int(np.count_nonzero(k > k_cap))
        k = np.minimum(k, k_cap)
        eps = (k - 1.0) / (k + 1.0) * np.exp(2j * np.pi * v)
        return eps, k, clamped


def rademacher() -> Distribution:
    return Distribution("rademacher")


def symmetric_disk(r: float = 1.0) -> Distribution:
    return Distribution("symmetric_disk", (float(r),))


def constant_dist(c: complex) -> Distribution:
    return Distribution("constant", (complex(c),))


def degenerate_k(gamma: float) -> Distribution:
    return Distribution("degenerate_k", (float(gamma),))
