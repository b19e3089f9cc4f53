"""Approximate chi-squared draws from a single standard normal variate.

The generator uses one of these per pool to pick the target sum of squares.
Each method is an explicit closed form in ``x``; constants depending only on
``nu`` are precomputed in :class:`Chi2Params` so the compiled kernel can
evaluate the identical expression.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .errors import InvalidParameterError

__all__ = [
    "Chi2Method",
    "Chi2Params",
    "compute_a",
    "cubic_residual",
    "newton_a",
    "chi2_sample",
    "chi2_clamped",
    "chi2_floor",
]


class Chi2Method(enum.IntEnum):
    SQRT_SHIFT = 0
    WILSON_HILFERTY = 1
    CUBIC_A = 2

    @classmethod
    def parse(cls, name: str) -> "Chi2Method":
        aliases = {
            "sqrt": cls.SQRT_SHIFT,
            "sqrt_shift": cls.SQRT_SHIFT,
            "wh": cls.WILSON_HILFERTY,
            "wilson_hilferty": cls.WILSON_HILFERTY,
            "cubic": cls.CUBIC_A,
            "cubic_a": cls.CUBIC_A,
        }
        try:
            return aliases[name.lower()]
        except KeyError:
            raise InvalidParameterError(f"unknown chi2 method {name!r}") from None


def compute_a(nu: int) -> float:
    """Root of ``A**3 - 3*nu*A + 2*nu = 0`` near 2/3.

    Uses the trigonometric closed form ``2*sqrt(nu)*sin(asin(1/sqrt(nu))/3)``.
    """
    if nu < 1:
        raise InvalidParameterError(f"nu must be >= 1, got {nu}")
    r = math.sqrt(nu)
    return 2.0 * r * math.sin(math.asin(1.0 / r) / 3.0)


def cubic_residual(a: float, nu: float) -> float:
    return a * a * a - 3.0 * nu * a + 2.0 * nu


def newton_a(nu: int, tol: float = 1e-12, max_iter: int = 50) -> float:
    """Independent Newton solve of the cubic, started at 2/3. Verification only."""
    a = 2.0 / 3.0
    for _ in range(max_iter):
        step = cubic_residual(a, nu) / (3.0 * a * a - 3.0 * nu)
        a -= step
        if abs(step) <= tol * max(1.0, abs(a)):
            return a
    raise ArithmeticError(f"Newton iteration for nu={nu} did not converge")


def chi2_floor(nu: int) -> float:
    return 1e-6 * nu


@dataclass(frozen=True)
class Chi2Params:
    """Per-``nu`` constants. ``k1``/``k2`` meaning depends on the method:

    * SQRT_SHIFT: ``S = 0.5*(x + k1)*(x + k1)`` with ``k1 = sqrt(2nu - 1)``
    * WILSON_HILFERTY: ``h = k1*x + k2``, ``S = nu*(h*h*h)``
    * CUBIC_A: ``S = a*(x*x - 1) + k1*x + nu`` with ``k1 = sqrt(2(nu - a^2))``
    """

    nu: int
    a_value: float | None = None
    method: Chi2Method = Chi2Method.CUBIC_A
    k1: float = 0.0
    k2: float = 0.0

    @classmethod
    def for_method(cls, nu: int, method: Chi2Method) -> "Chi2Params":
        if nu < 8:
            raise InvalidParameterError(f"nu must be >= 8, got {nu}")
        method = Chi2Method(method)
        if method is Chi2Method.SQRT_SHIFT:
            return cls(nu, None, method, math.sqrt(2.0 * nu - 1.0), 0.0)
        if method is Chi2Method.WILSON_HILFERTY:
            q = 2.0 / (9.0 * nu)
            return cls(nu, None, method, math.sqrt(q), 1.0 - q)
        a = compute_a(nu)
        return cls(nu, a, method, math.sqrt(2.0 * (nu - a * a)), 0.0)


def chi2_clamped(x: float, params: Chi2Params) -> tuple[float, bool]:
    """Return ``(S, clamped)``; ``clamped`` is set when S hit the positive floor."""
    if not math.isfinite(x):
        raise InvalidParameterError(f"x must be finite, got {x!r}")
    m = params.method
    nu = float(params.nu)
    if m == Chi2Method.SQRT_SHIFT:
        s = 0.5 * (x + params.k1) * (x + params.k1)
    elif m == Chi2Method.WILSON_HILFERTY:
        h = params.k1 * x + params.k2
        s = nu * (h * h * h)
    else:
        s = params.a_value * (x * x - 1.0) + params.k1 * x + nu
    floor = 1e-6 * nu
    if s < floor:
        return floor, True
    return s, False


def chi2_sample(x: float, params: Chi2Params, method: Chi2Method | None = None) -> float:
    if method is not None and Chi2Method(method) != params.method:
        params = Chi2Params.for_method(params.nu, method)
    return chi2_clamped(x, params)[0]
