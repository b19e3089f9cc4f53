"""Fast invariant checks behind ``maxentrng selftest``."""
from __future__ import annotations

import time
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from . import _backend
from .baselines import new_uniform
from .chi2 import Chi2Method, Chi2Params, chi2_sample, compute_a, cubic_residual
from .generator import Generator, GeneratorConfig, TransformFamily
from .transforms import (
    ROTATION_T_TABLE,
    AffinePermutation,
    StrideTranspose,
    apply_wallace4,
    default_multipliers,
    default_stride,
    permute_index,
    rotation_from_t,
    stride_transpose_index,
    wallace_a1,
    wallace_variants,
)

FAULTS = ("transform-table",)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str = ""
    seconds: float = 0.0


def _variants(faults: frozenset[str]):
    variants = wallace_variants(16)
    if "transform-table" in faults:
        bad = variants[3].entries.copy()
        bad[0, 0] = 0.6
        variants[3] = replace(variants[3], entries=bad)
    return variants


def _check_a1(_):
    expected = 0.5 * np.array([[1, 1, -1, 1], [1, -1, 1, 1], [1, -1, -1, -1], [-1, -1, -1, 1]])
    return bool(np.array_equal(wallace_a1().entries, expected)), "A1 entries"


def _check_orthogonal(faults):
    worst = 0.0
    for m in _variants(faults):
        worst = max(worst, float(np.abs(m.entries.T @ m.entries - np.eye(4)).max()))
    return worst == 0.0, f"max |M^T M - I| = {worst:.3g}"


def _check_butterfly(faults):
    rng = np.random.default_rng(1)
    worst = 0.0
    for m in _variants(faults):
        for v in rng.standard_normal((64, 4)):
            worst = max(worst, float(np.abs(np.array(apply_wallace4(v, m)) - m.entries @ v).max()))
    return worst < 1e-14, f"max butterfly deviation = {worst:.3g}"


def _check_rotation_table(_):
    worst = max(abs(r.c * r.c + r.s * r.s - 1.0) for r in map(rotation_from_t, ROTATION_T_TABLE))
    return worst <= 4 * 2.0**-52, f"max |c^2+s^2-1| = {worst:.3g}"


def _check_affine(_):
    n = 1024
    alpha, beta = default_multipliers(n)
    ok = all(
        sorted(permute_index(j, AffinePermutation(a, g, n)) for j in range(n)) == list(range(n))
        for a, g in ((alpha, 0), (beta, 17), (1, 5))
    )
    return ok, "affine maps are bijections on 1024 indices"


def _check_stride(_):
    rows = 256
    st = StrideTranspose(rows, default_stride(rows), (3, 0, 250, 7))
    img = sorted(stride_transpose_index(j, st) for j in range(4 * rows))
    return img == list(range(4 * rows)), f"stride {st.stride} on 256 x 4"


def _check_chi2_spots(_):
    nu = 1024
    s1 = chi2_sample(0.0, Chi2Params.for_method(nu, Chi2Method.SQRT_SHIFT))
    s2 = chi2_sample(0.0, Chi2Params.for_method(nu, Chi2Method.WILSON_HILFERTY))
    p3 = Chi2Params.for_method(nu, Chi2Method.CUBIC_A)
    s3 = chi2_sample(0.0, p3)
    ok = abs(s1 - 1023.5) < 1e-9 * nu and abs(s2 - nu * (1 - 2 / (9 * nu)) ** 3) < 1e-9 and abs(s3 - (nu - p3.a_value)) < 1e-9 * nu
    return ok, f"S(0): sqrt={s1} wh={s2:.6f} cubic={s3:.6f}"


def _check_cubic(_):
    worst = max(abs(cubic_residual(compute_a(nu), nu)) / nu for nu in (2, 64, 1024, 10**6))
    return worst <= 1e-6, f"max residual/nu = {worst:.3g}"


def _check_uniform_vector(_):
    u = new_uniform(0)
    u.set_state((1, 2, 3, 4))
    got = [u.next_u64() for _ in range(4)]
    return got == [11520, 0, 1509978240, 1215971899390074240], f"xoshiro256** outputs {got}"


def _check_conservation(_):
    gen = Generator(GeneratorConfig(seed=5, renorm_every=0))
    worst = 0.0
    for _ in range(200):
        gen.regenerate()
        worst = max(worst, abs(gen.sum_squares() - 1024.0))
    for fam in TransformFamily:
        g = Generator(GeneratorConfig(seed=5, transform_family=fam, renorm_every=0, pool_size=64))
        for _ in range(200):
            g.regenerate()
            worst = max(worst, abs(g.sum_squares() - 64.0) * 16)
    return worst <= 1e-6 * 1024, f"max sum-of-squares drift = {worst:.3g}"


def _check_determinism(_):
    cfg = GeneratorConfig(seed=42)
    a = Generator(cfg).fill(10_000)
    b = Generator(cfg).fill(10_000)
    return bool(np.array_equal(a, b)), "same seed, same 10^4 values"


def _check_fill_next(_):
    cfg = GeneratorConfig(seed=9, pool_size=64)
    g1, g2 = Generator(cfg), Generator(cfg)
    a = np.concatenate([g1.fill(50), g1.fill(100), g1.fill(7)])
    b = np.array([g2.next_normal() for _ in range(157)])
    return bool(np.array_equal(a, b)), "fill() chunks equal next_normal() calls"


def _check_uniform_draws(_):
    g = Generator(GeneratorConfig(seed=1))
    before, pools = g.uniform_draws, g.emitted_pools
    g.fill(10 * 1023)
    per_pool = (g.uniform_draws - before) / max(1, g.emitted_pools - pools)
    return per_pool >= 1, f"{per_pool:.2f} uniform draws per pool"


def _check_backends(_):
    if not _backend.compiled_available():
        return True, "compiled core absent; fallback only"
    from . import _core, _pycore

    outs = []
    for mod in (_core, _pycore):
        u = mod.Uniform(3)
        out = np.empty(500)
        mod.PolarCore(u).fill(out)
        outs.append(out)
    return bool(np.array_equal(*outs)), "compiled and fallback Polar streams agree"


CHECKS: tuple[tuple[str, Callable], ...] = (
    ("transforms.a1_matrix", _check_a1),
    ("transforms.variants_orthogonal", _check_orthogonal),
    ("transforms.butterfly_matches_matrix", _check_butterfly),
    ("transforms.rotation_unit_norm", _check_rotation_table),
    ("transforms.affine_bijective", _check_affine),
    ("transforms.stride_transpose_bijective", _check_stride),
    ("chi2.spot_values", _check_chi2_spots),
    ("chi2.cubic_root", _check_cubic),
    ("baselines.xoshiro_vector", _check_uniform_vector),
    ("generator.norm_conservation", _check_conservation),
    ("generator.determinism", _check_determinism),
    ("generator.fill_equals_next", _check_fill_next),
    ("generator.uniform_per_pool", _check_uniform_draws),
    ("backend.agreement", _check_backends),
)


def run_checks(faults=()) -> list[CheckResult]:
    faults = frozenset(faults)
    unknown = faults - set(FAULTS)
    if unknown:
        raise ValueError(f"unknown fault(s): {sorted(unknown)}")
    results = []
    for name, fn in CHECKS:
        t0 = time.perf_counter()
        try:
            ok, detail = fn(faults)
        except Exception as exc:  # a crashing check is a failing check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        results.append(CheckResult(name, bool(ok), detail, time.perf_counter() - t0))
    return results
