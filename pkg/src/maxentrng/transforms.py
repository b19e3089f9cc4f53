"""Norm-preserving transforms and index permutations used by the pool pass.

Two transform families are provided:

* plane rotations parametrised by the half-angle tangent ``t`` so that no
  trigonometric function is ever evaluated;
* 4x4 orthogonal matrices with entries +-1/2, applied with a butterfly of
  seven additions and one halving.

Mixing between passes uses either an affine index map ``j -> (a*j + g) mod n``
or a stride-transpose of the pool viewed as an ``(n/4) x 4`` matrix.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InvalidParameterError

__all__ = [
    "RotationCoeffs",
    "WallaceMatrix",
    "AffinePermutation",
    "StrideTranspose",
    "ROTATION_T_TABLE",
    "MAX_VARIANTS",
    "rotation_from_t",
    "apply_rotation",
    "wallace_a1",
    "wallace_variants",
    "variant_tables",
    "apply_wallace4",
    "permute_index",
    "stride_transpose_index",
    "default_stride",
    "default_multipliers",
]

# Rows of 2*A1. Row k of A1 applied to (a, b, c, d) equals, in order,
# t - c, t - b, a - t, d - t with t = (a + b + c + d) / 2.
_A1_TWICE = (
    (1, 1, -1, 1),
    (1, -1, 1, 1),
    (1, -1, -1, -1),
    (-1, -1, -1, 1),
)

_PERMUTATIONS = tuple(itertools.permutations(range(4)))
MAX_VARIANTS = len(_PERMUTATIONS) * 16

# Dyadic t values: t*t and 1 + t*t are exact, so c and s carry one rounding each.
# Angles 2*atan(t) lie in [0.34, 1.14] rad, keeping c and s away from 0 and 1.
ROTATION_T_TABLE = tuple((11 + 2 * i) / 64 for i in range(16))

# Above this |t| the square overflows; switch to the reciprocal form.
_T_RECIPROCAL = 1e150


@dataclass(frozen=True)
class RotationCoeffs:
    c: float
    s: float
    t: float


@dataclass(frozen=True)
class WallaceMatrix:
    """A signed row permutation of A1.

    ``perm[k]`` is the row of A1 that becomes row ``k`` and ``signs[k]`` its
    sign, so ``entries[k] == signs[k] * A1[perm[k]]``.
    """

    entries: np.ndarray
    variant_id: int
    perm: tuple[int, int, int, int] = (0, 1, 2, 3)
    signs: tuple[float, float, float, float] = (1.0, 1.0, 1.0, 1.0)

    def __post_init__(self):
        self.entries.setflags(write=False)


@dataclass(frozen=True)
class AffinePermutation:
    multiplier: int
    offset: int
    modulus: int

    def __post_init__(self):
        n = self.modulus
        if n < 1 or n & (n - 1):
            raise InvalidParameterError(f"modulus must be a power of 2, got {n}")
        if self.multiplier <= 0 or self.multiplier % 2 == 0:
            raise InvalidParameterError(f"multiplier must be odd and positive, got {self.multiplier}")
        if self.offset < 0:
            raise InvalidParameterError(f"offset must be non-negative, got {self.offset}")


@dataclass(frozen=True)
class StrideTranspose:
    """Gather map for an ``rows x 4`` pool.

    Output slot ``4*b + k`` reads column ``k`` at row ``(b*stride + offsets[k]) mod rows``
    of the column-major view, i.e. source index ``k*rows + row``.
    """

    rows: int
    stride: int
    offsets: tuple[int, int, int, int] = field(default=(0, 0, 0, 0))

    def __post_init__(self):
        if self.rows < 1:
            raise InvalidParameterError(f"rows must be positive, got {self.rows}")
        if self.stride <= 0 or math.gcd(self.stride, self.rows) != 1:
            raise InvalidParameterError(
                f"stride {self.stride} must be positive and coprime to rows={self.rows}"
            )
        if len(self.offsets) != 4 or any(o < 0 for o in self.offsets):
            raise InvalidParameterError("offsets must be four non-negative integers")


def rotation_from_t(t: float) -> RotationCoeffs:
    if not math.isfinite(t):
        raise InvalidParameterError(f"t must be finite, got {t!r}")
    if abs(t) > _T_RECIPROCAL:
        u = 1.0 / t
        uu = u * u
        return RotationCoeffs(c=(uu - 1.0) / (uu + 1.0), s=2.0 * u / (uu + 1.0), t=t)
    tt = t * t
    return RotationCoeffs(c=(1.0 - tt) / (1.0 + tt), s=2.0 * t / (1.0 + tt), t=t)


def apply_rotation(x1: float, x2: float, r: RotationCoeffs) -> tuple[float, float]:
    return r.c * x1 + r.s * x2, r.c * x2 - r.s * x1


def wallace_a1() -> WallaceMatrix:
    return _variant(0, (0, 1, 2, 3), 0)


def _variant(variant_id: int, perm: Sequence[int], mask: int) -> WallaceMatrix:
    signs = tuple(-1.0 if (mask >> k) & 1 else 1.0 for k in range(4))
    rows = [[signs[k] * 0.5 * v for v in _A1_TWICE[perm[k]]] for k in range(4)]
    return WallaceMatrix(np.array(rows, dtype=np.float64), variant_id, tuple(perm), signs)


def wallace_variants(count: int) -> list[WallaceMatrix]:
    """Deterministic list of ``count`` distinct signed row permutations of A1.

    Variant ``16*p + m`` uses the ``p``-th row permutation (lexicographic) and
    negates row ``k`` when bit ``k`` of ``m`` is set. The first 16 variants are
    the 16 sign patterns of A1 itself, which already average to zero entrywise.
    """
    if count < 1:
        raise InvalidParameterError(f"count must be positive, got {count}")
    if count > MAX_VARIANTS:
        raise InvalidParameterError(f"at most {MAX_VARIANTS} distinct variants exist, got {count}")
    return [_variant(v, _PERMUTATIONS[v // 16], v % 16) for v in range(count)]


def variant_tables(variants: Sequence[WallaceMatrix]) -> tuple[np.ndarray, np.ndarray]:
    """Pack variants into (perm, sign) arrays consumed by the pool kernels."""
    perm = np.array([m.perm for m in variants], dtype=np.int64).reshape(-1, 4)
    sign = np.array([m.signs for m in variants], dtype=np.float64).reshape(-1, 4)
    return perm, sign


def apply_wallace4(v: Sequence[float], m: WallaceMatrix) -> tuple[float, float, float, float]:
    a, b, c, d = (float(x) for x in v)
    t = (a + b + c + d) * 0.5
    r = (t - c, t - b, a - t, d - t)
    p, s = m.perm, m.signs
    return (s[0] * r[p[0]], s[1] * r[p[1]], s[2] * r[p[2]], s[3] * r[p[3]])


def permute_index(j: int, p: AffinePermutation) -> int:
    if not 0 <= j < p.modulus:
        raise InvalidParameterError(f"index {j} out of range [0, {p.modulus})")
    return (p.multiplier * j + p.offset) % p.modulus


def stride_transpose_index(j: int, st: StrideTranspose) -> int:
    if not 0 <= j < 4 * st.rows:
        raise InvalidParameterError(f"index {j} out of range [0, {4 * st.rows})")
    b, k = divmod(j, 4)
    return k * st.rows + (b * st.stride + st.offsets[k]) % st.rows


def default_stride(rows: int) -> int:
    """Smallest odd integer above rows/3 that is coprime to ``rows``."""
    s = rows // 3 + 1
    if s % 2 == 0:
        s += 1
    while math.gcd(s, rows) != 1:
        s += 2
    return s


def default_multipliers(n: int) -> tuple[int, int]:
    """Odd multipliers near n/phi and n/phi**2 for the two affine sweeps."""
    if n < 4 or n & (n - 1):
        raise InvalidParameterError(f"n must be a power of 2 >= 4, got {n}")
    return int(n * 0.6180339887498949) | 1, int(n * 0.3819660112501051) | 1
