"""The pool-based maximum-entropy normal generator.

A pool of ``n`` raw normal variates is regenerated in place by one pass of
norm-preserving transforms per pool. Each emitted pool returns ``n - 1``
values scaled so the pool's sum of squares equals a chi-squared draw ``S``;
the last scaled value is held back and drives ``S`` for the next pool.

Typical use::

    gen = Generator(GeneratorConfig(seed=42))
    x = gen.fill(10_000)
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

from ._backend import core
from .chi2 import Chi2Method, Chi2Params
from .errors import ConfigurationError, InvalidParameterError
from .transforms import (
    MAX_VARIANTS,
    ROTATION_T_TABLE,
    default_multipliers,
    default_stride,
    rotation_from_t,
    variant_tables,
    wallace_variants,
)

__all__ = [
    "TransformFamily",
    "Mixing",
    "GeneratorConfig",
    "NormalPool",
    "Generator",
    "new_generator",
    "regenerate_pool",
    "emit_pool",
    "next_normal",
    "fill",
]


class TransformFamily(enum.IntEnum):
    WALLACE4 = 0
    ROTATION = 1


class Mixing(enum.IntEnum):
    STRIDE_TRANSPOSE = 0
    AFFINE = 1


@dataclass(frozen=True)
class GeneratorConfig:
    pool_size: int = 1024
    transform_family: TransformFamily = TransformFamily.WALLACE4
    mixing: Mixing = Mixing.STRIDE_TRANSPOSE
    chi2_method: Chi2Method = Chi2Method.CUBIC_A
    discard_every: int = 1
    out_mean: float = 0.0
    out_sigma: float = 1.0
    seed: int = 0
    variant_count: int = 16
    warmup_passes: int = 16
    renorm_every: int = 256
    # test hook: False reproduces the uncorrected generator with a constant sum of squares
    chi2_correction: bool = True

    def validate(self) -> "GeneratorConfig":
        n = self.pool_size
        if not isinstance(n, (int, np.integer)) or n < 32 or n & (n - 1):
            raise ConfigurationError("pool_size", f"must be a power of 2 and >= 32, got {n!r}")
        try:
            TransformFamily(self.transform_family)
        except ValueError:
            raise ConfigurationError("transform_family", f"unknown value {self.transform_family!r}") from None
        try:
            Mixing(self.mixing)
        except ValueError:
            raise ConfigurationError("mixing", f"unknown value {self.mixing!r}") from None
        try:
            Chi2Method(self.chi2_method)
        except ValueError:
            raise ConfigurationError("chi2_method", f"unknown value {self.chi2_method!r}") from None
        if self.discard_every < 1:
            raise ConfigurationError("discard_every", f"must be >= 1, got {self.discard_every}")
        if not math.isfinite(self.out_mean):
            raise ConfigurationError("out_mean", "must be finite")
        if not (math.isfinite(self.out_sigma) and self.out_sigma > 0):
            raise ConfigurationError("out_sigma", f"must be positive and finite, got {self.out_sigma}")
        if not 1 <= self.variant_count <= MAX_VARIANTS:
            raise ConfigurationError("variant_count", f"must lie in [1, {MAX_VARIANTS}]")
        if self.warmup_passes < 0:
            raise ConfigurationError("warmup_passes", "must be >= 0")
        if self.renorm_every < 0:
            raise ConfigurationError("renorm_every", "must be >= 0 (0 disables)")
        if not -(2**63) <= self.seed < 2**64:
            raise ConfigurationError("seed", "must fit in 64 bits")
        return self

    def with_(self, **changes) -> "GeneratorConfig":
        return replace(self, **changes)


@dataclass(frozen=True)
class NormalPool:
    """Snapshot of the generator state between passes."""

    raw: np.ndarray
    reserved_prev: float
    pass_count: int
    sum_sq: float


class Generator:
    def __init__(self, config: GeneratorConfig | None = None):
        cfg = (config or GeneratorConfig()).validate()
        self.config = cfg
        n = cfg.pool_size
        self.uniform = core.Uniform(cfg.seed)
        polar = core.PolarCore(self.uniform)
        raw = np.empty(n, dtype=np.float64)
        polar.fill(raw)
        reserved = polar.next()
        s = 0.0
        for v in raw.tolist():
            s += v * v
        raw = raw * math.sqrt(n / s)

        self.chi2_params = Chi2Params.for_method(n, cfg.chi2_method)
        self.variants = wallace_variants(cfg.variant_count)
        perm, sign = variant_tables(self.variants)
        rot = [rotation_from_t(t) for t in ROTATION_T_TABLE]
        self.stride = default_stride(n // 4)
        self.alpha, self.beta = default_multipliers(n)
        p = self.chi2_params
        self._core = core.WallaceCore(
            self.uniform,
            raw,
            reserved,
            int(cfg.transform_family),
            int(cfg.mixing),
            perm,
            sign,
            np.array([r.c for r in rot]),
            np.array([r.s for r in rot]),
            self.stride,
            self.alpha,
            self.beta,
            int(p.method),
            p.k1,
            p.k2,
            p.a_value if p.a_value is not None else 0.0,
            float(cfg.out_mean),
            float(cfg.out_sigma),
            int(cfg.discard_every),
            bool(cfg.chi2_correction),
            int(cfg.renorm_every),
        )
        for _ in range(cfg.warmup_passes):
            self._core.do_pass(False)

    # -- state -----------------------------------------------------------
    @property
    def backend(self) -> str:
        return core.BACKEND

    @property
    def pool_size(self) -> int:
        return self.config.pool_size

    @property
    def pass_count(self) -> int:
        return int(self._core.pass_count)

    @property
    def uniform_draws(self) -> int:
        return int(self.uniform.draws)

    @property
    def emitted_pools(self) -> int:
        return int(self._core.emitted_pools)

    @property
    def clamp_count(self) -> int:
        """Pools whose chi-squared draw hit the positive floor."""
        return int(self._core.clamp_count)

    @property
    def reserved(self) -> float:
        return float(self._core.reserved)

    def raw_pool(self) -> np.ndarray:
        return self._core.get_pool()

    def sum_squares(self) -> float:
        return float(self._core.sum_squares())

    @property
    def pool(self) -> NormalPool:
        return NormalPool(self.raw_pool(), self.reserved, self.pass_count, float(self.pool_size))

    def set_raw_pool(self, raw) -> None:
        """Overwrite the raw pool (tests and diagnostics)."""
        raw = np.asarray(raw, dtype=np.float64)
        if raw.shape != (self.pool_size,) or not np.all(np.isfinite(raw)):
            raise InvalidParameterError(f"raw pool must be {self.pool_size} finite values")
        self._core.set_pool(raw)

    # -- pool-level operations --------------------------------------------
    def regenerate(self, fixed: bool = False) -> None:
        """One pass over the pool.

        ``fixed=True`` applies variant 0 with zero offsets (and the first
        rotation angle), ignoring the uniform draw. It still consumes it.
        """
        self._core.do_pass(bool(fixed))

    def emit_pool(self) -> tuple[np.ndarray, float]:
        out = np.empty(self.pool_size - 1, dtype=np.float64)
        self._core.emit(out)
        return out, self.reserved

    def next_pool(self) -> tuple[np.ndarray, float]:
        """``discard_every`` passes, then one emission. Bypasses the value buffer."""
        out = np.empty(self.pool_size - 1, dtype=np.float64)
        self._core.advance(out)
        return out, self.reserved

    # -- streaming ---------------------------------------------------------
    def next_normal(self) -> float:
        return self._core.next()

    def fill_into(self, out: np.ndarray) -> None:
        self._core.fill(out)

    def fill(self, count: int) -> np.ndarray:
        if count < 1:
            raise InvalidParameterError(f"count must be >= 1, got {count}")
        out = np.empty(int(count), dtype=np.float64)
        self._core.fill(out)
        return out


def new_generator(config: GeneratorConfig | None = None) -> Generator:
    return Generator(config)


def regenerate_pool(gen: Generator, fixed: bool = False) -> NormalPool:
    gen.regenerate(fixed)
    return gen.pool


def emit_pool(gen: Generator) -> tuple[np.ndarray, float]:
    return gen.emit_pool()


def next_normal(gen: Generator) -> float:
    return gen.next_normal()


def fill(gen: Generator, count: int) -> np.ndarray:
    return gen.fill(count)
