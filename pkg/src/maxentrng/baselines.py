"""Conventional generators: the uniform helper, Polar and Box-Muller.

The uniform helper is xoshiro256** (Blackman and Vigna, 2018) with its four
state words seeded from splitmix64(seed)::

    result = rotl(s1 * 5, 7) * 9
    t = s1 << 17
    s2 ^= s0; s3 ^= s1; s1 ^= s2; s0 ^= s3; s2 ^= t; s3 = rotl(s3, 45)

Doubles are ``(result >> 11) * 2**-53``, so they lie in [0, 1). The period is
2**256 - 1. Reference outputs for state (1, 2, 3, 4) are 11520, 0,
1509978240, 1215971899390074240.
"""
from __future__ import annotations

import math

import numpy as np

from ._backend import core
from .errors import InvalidParameterError

__all__ = [
    "UniformState",
    "BaselineState",
    "BoxMullerState",
    "new_uniform",
    "uniform_next",
    "uniform_fill",
    "polar_next",
    "polar_fill",
    "boxmuller_pair",
    "boxmuller_next",
    "boxmuller_fill",
    "exact_chi2_oracle",
    "exact_chi2_samples",
]

UniformState = core.Uniform


def new_uniform(seed: int = 0) -> "core.Uniform":
    return core.Uniform(seed)


def uniform_next(u) -> float:
    return u.next_double()


def uniform_fill(u, count: int) -> np.ndarray:
    out = np.empty(count, dtype=np.float64)
    u.fill(out)
    return out


class BaselineState:
    """Polar-method stream. Each accepted point yields two normals; the
    second is held in ``cached`` until the next call."""

    def __init__(self, seed: int = 0, uniform=None):
        self.uniform = uniform if uniform is not None else core.Uniform(seed)
        self._core = core.PolarCore(self.uniform)

    @property
    def cached(self) -> float | None:
        return self._core.cached if self._core.has_cached else None

    @property
    def attempts(self) -> int:
        """Number of (u, v) points drawn, accepted or not."""
        return self._core.attempts

    @property
    def pairs(self) -> int:
        return self._core.pairs

    def next(self) -> float:
        return self._core.next()

    def fill_into(self, out: np.ndarray) -> None:
        self._core.fill(out)

    def fill(self, count: int) -> np.ndarray:
        out = np.empty(count, dtype=np.float64)
        self._core.fill(out)
        return out


class BoxMullerState:
    def __init__(self, seed: int = 0, uniform=None):
        self.uniform = uniform if uniform is not None else core.Uniform(seed)
        self._core = core.BoxMullerCore(self.uniform)

    @property
    def cached(self) -> float | None:
        return self._core.cached if self._core.has_cached else None

    def next(self) -> float:
        return self._core.next()

    def fill_into(self, out: np.ndarray) -> None:
        self._core.fill(out)

    def fill(self, count: int) -> np.ndarray:
        out = np.empty(count, dtype=np.float64)
        self._core.fill(out)
        return out


def polar_next(s: BaselineState) -> float:
    return s.next()


def polar_fill(s: BaselineState, count: int) -> np.ndarray:
    return s.fill(count)


def boxmuller_pair(u1: float, u2: float) -> tuple[float, float]:
    if not 0.0 < u1 <= 1.0:
        raise InvalidParameterError(f"u1 must lie in (0, 1], got {u1!r}")
    if not 0.0 <= u2 < 1.0:
        raise InvalidParameterError(f"u2 must lie in [0, 1), got {u2!r}")
    r = math.sqrt(-2.0 * math.log(u1))
    th = 2.0 * math.pi * u2
    return r * math.cos(th), r * math.sin(th)


def boxmuller_next(s: BoxMullerState) -> float:
    return s.next()


def boxmuller_fill(s: BoxMullerState, count: int) -> np.ndarray:
    return s.fill(count)


def exact_chi2_oracle(nu: int, s: BaselineState) -> float:
    """Sum of ``nu`` squared Polar normals. Slow; for tests only."""
    if nu < 1:
        raise InvalidParameterError(f"nu must be >= 1, got {nu}")
    x = s.fill(nu)
    return float(np.dot(x, x))


def exact_chi2_samples(nu: int, count: int, s: BaselineState) -> np.ndarray:
    if nu < 1 or count < 1:
        raise InvalidParameterError("nu and count must be >= 1")
    out = np.empty(count, dtype=np.float64)
    block = max(1, 2**20 // nu)
    for start in range(0, count, block):
        m = min(block, count - start)
        x = s.fill(m * nu).reshape(m, nu)
        out[start : start + m] = np.einsum("ij,ij->i", x, x)
    return out
