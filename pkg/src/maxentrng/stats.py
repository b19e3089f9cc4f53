"""Defect-detection suite for normal generators.

Every test returns :class:`TestReport` records judged at five standard
errors. Reports have a ``role``:

``check``
    must PASS for the suite to pass;
``control``
    a deliberately broken configuration that must FAIL (e.g. the generator
    with the chi-squared correction switched off);
``info``
    reported for inspection, never gating.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist
from typing import Iterable, Sequence

import numpy as np

from .baselines import BaselineState
from .errors import InvalidParameterError
from .generator import Generator, GeneratorConfig, Mixing, TransformFamily
from .transforms import (
    AffinePermutation,
    ROTATION_T_TABLE,
    StrideTranspose,
    default_multipliers,
    default_stride,
    permute_index,
    rotation_from_t,
    stride_transpose_index,
    wallace_a1,
)

__all__ = [
    "Z_THRESHOLD",
    "MomentSummary",
    "TestReport",
    "moments",
    "moment_reports",
    "squared_correlation_model",
    "fixed_pass_matrix",
    "correlation_matrix",
    "cross_pool_correlation",
    "pool_sum_squares_test",
    "rare_event_adjacency",
    "rare_event_adjacency_stream",
    "threshold_for_rate",
    "suite_passed",
    "format_text",
    "format_kv",
    "parse_kv",
]

Z_THRESHOLD = 5.0
ROLES = ("check", "control", "info")


@dataclass(frozen=True)
class MomentSummary:
    count: int
    mean: float
    variance: float
    skewness: float
    excess_kurtosis: float


@dataclass(frozen=True)
class TestReport:
    __test__ = False  # not a pytest class

    name: str
    statistic: float
    expected: float
    std_error: float
    z_score: float
    verdict: str
    role: str = "check"

    @classmethod
    def build(cls, name: str, statistic: float, expected: float, std_error: float,
              role: str = "check") -> "TestReport":
        if role not in ROLES:
            raise InvalidParameterError(f"role must be one of {ROLES}")
        z = _z(statistic, expected, std_error)
        verdict = "PASS" if abs(z) <= Z_THRESHOLD else "FAIL"
        return cls(name, float(statistic), float(expected), float(std_error), z, verdict, role)

    @property
    def passed(self) -> bool:
        return self.verdict == "PASS"

    @property
    def ok(self) -> bool:
        """Outcome matches the role: checks pass, controls fail, info always ok."""
        if self.role == "check":
            return self.passed
        if self.role == "control":
            return not self.passed
        return True


def _z(statistic: float, expected: float, se: float) -> float:
    if not math.isfinite(statistic):
        return math.nan
    diff = statistic - expected
    if se > 0:
        return diff / se
    if diff == 0:
        return 0.0
    return math.copysign(math.inf, diff)


# -- moments ------------------------------------------------------------------

_CHUNK = 1 << 16


def moments(samples) -> MomentSummary:
    """Single pass over chunks, merging central sums with the pairwise update
    of Chan et al. / Pebay, so large arrays never lose precision."""
    x = np.asarray(samples, dtype=np.float64).ravel()
    n_total = x.shape[0]
    if n_total < 2:
        raise InvalidParameterError(f"need at least 2 samples, got {n_total}")
    n = 0
    mean = m2 = m3 = m4 = 0.0
    for start in range(0, n_total, _CHUNK):
        c = x[start : start + _CHUNK]
        nb = c.shape[0]
        mb = float(c.mean())
        d = c - mb
        d2 = d * d
        m2b = float(d2.sum())
        m3b = float((d2 * d).sum())
        m4b = float((d2 * d2).sum())
        if n == 0:
            n, mean, m2, m3, m4 = nb, mb, m2b, m3b, m4b
            continue
        na = n
        n = na + nb
        delta = mb - mean
        dn = delta / n
        m4 = (m4 + m4b + delta * dn * dn * dn * na * nb * (na * na - na * nb + nb * nb)
              + 6.0 * dn * dn * (na * na * m2b + nb * nb * m2) + 4.0 * dn * (na * m3b - nb * m3))
        m3 = m3 + m3b + delta * dn * dn * na * nb * (na - nb) + 3.0 * dn * (na * m2b - nb * m2)
        m2 = m2 + m2b + delta * dn * na * nb
        mean = mean + dn * nb
    variance = m2 / (n - 1)
    if m2 > 0:
        skew = math.sqrt(n) * m3 / m2**1.5
        kurt = n * m4 / (m2 * m2) - 3.0
    else:
        skew = kurt = 0.0
    return MomentSummary(n, mean, variance, skew, kurt)


def moment_reports(samples, label: str = "moments", mean: float = 0.0,
                   sigma: float = 1.0) -> list[TestReport]:
    """Compare the first four moments with N(mean, sigma^2) using asymptotic SEs."""
    m = samples if isinstance(samples, MomentSummary) else moments(samples)
    n = m.count
    return [
        TestReport.build(f"{label}.mean", m.mean, mean, sigma / math.sqrt(n)),
        TestReport.build(f"{label}.variance", m.variance, sigma * sigma, sigma * sigma * math.sqrt(2.0 / n)),
        TestReport.build(f"{label}.skewness", m.skewness, 0.0, math.sqrt(6.0 / n)),
        TestReport.build(f"{label}.excess_kurtosis", m.excess_kurtosis, 0.0, math.sqrt(24.0 / n)),
    ]


# -- squared-value correlation model --------------------------------------------

def squared_correlation_model(trials: int, u=None, theta: float | None = None,
                              seed: int = 0) -> TestReport:
    """Estimate E(x1^2 y1^2) for y1 = cos(theta) x1 + sin(theta) x2.

    With theta uniform on [0, 2pi) the answer is 2, although x1 and y1 are
    uncorrelated with unit variances. Passing ``theta`` pins the angle
    (0 gives E(x^4) = 3, pi/2 gives 1).
    """
    if trials < 10_000:
        raise InvalidParameterError(f"trials must be >= 10000, got {trials}")
    state = BaselineState(seed, uniform=u)
    x1 = state.fill(trials)
    x2 = state.fill(trials)
    if theta is None:
        th = np.empty(trials, dtype=np.float64)
        state.uniform.fill(th)
        th *= 2.0 * math.pi
        expected = 2.0
        name = "sqcorr.uniform_theta"
    else:
        th = np.full(trials, float(theta))
        c2 = math.cos(theta) ** 2
        expected = 3.0 * c2 + (1.0 - c2)
        name = f"sqcorr.theta={theta:.6g}"
    y1 = np.cos(th) * x1 + np.sin(th) * x2
    prod = x1 * x1 * y1 * y1
    se = float(prod.std(ddof=1)) / math.sqrt(trials)
    return TestReport.build(name, float(prod.mean()), expected, se)


# -- cross-pool correlation --------------------------------------------------------

def fixed_pass_matrix(config: GeneratorConfig) -> np.ndarray:
    """The n x n matrix of one fixed-transform pass, composed explicitly from the
    index maps and block matrices (independent of the pass kernels)."""
    cfg = config.validate()
    n = cfg.pool_size
    rows = n // 4
    stride = default_stride(rows)
    alpha, beta = default_multipliers(n)

    def gather(mult: int, groups: int) -> np.ndarray:
        g = np.zeros((n, n))
        if cfg.mixing == Mixing.STRIDE_TRANSPOSE:
            st = StrideTranspose(rows, stride)
            for j in range(n):
                g[j, stride_transpose_index(j, st)] = 1.0
        else:
            # slot k of group b reads the affine image of k*(n/groups) + b
            p = AffinePermutation(mult, 0, n)
            for j in range(n):
                b, k = divmod(j, groups)
                g[j, permute_index(k * (n // groups) + b, p)] = 1.0
        return g

    if cfg.transform_family == TransformFamily.WALLACE4:
        block = np.kron(np.eye(rows), wallace_a1().entries)
        return block @ gather(alpha, 4)
    r = rotation_from_t(ROTATION_T_TABLE[0])
    rot = np.kron(np.eye(n // 2), np.array([[r.c, r.s], [-r.s, r.c]]))
    return (rot @ gather(beta, 2)) @ (rot @ gather(alpha, 2))


def correlation_matrix(xs, ys) -> np.ndarray:
    """``corr[i, j]`` = sample correlation of column ``i`` of ``ys`` with
    column ``j`` of ``xs`` (rows are observations)."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.ndim != 2 or ys.ndim != 2 or xs.shape[0] != ys.shape[0] or xs.shape[0] < 2:
        raise InvalidParameterError("xs and ys must be 2-d with the same number (>= 2) of rows")
    xc = xs - xs.mean(axis=0)
    yc = ys - ys.mean(axis=0)
    sx = np.sqrt((xc * xc).sum(axis=0))
    sy = np.sqrt((yc * yc).sum(axis=0))
    if np.any(sx == 0) or np.any(sy == 0):
        raise InvalidParameterError("zero-variance pool position: correlation undefined")
    return (yc.T @ xc) / np.outer(sy, sx)


def cross_pool_correlation(config: GeneratorConfig, pool_pairs: int,
                           probes: Sequence[tuple[int, int]] | None = None,
                           fixed_transform: bool = False, against_null: bool = False,
                           role: str = "check") -> list[TestReport]:
    """Correlation of x_j (raw pool before a pass) with y_i (after it).

    Randomized mode captures consecutive pools, expected correlation 0.
    ``fixed_transform`` makes every captured pass the fixed transform; the
    source pools are refreshed by one randomized pass between pairs so that
    they stay a fresh sample (a fixed orthogonal map iterated on its own is not
    ergodic). The expected value is then the composed entry q_ij, unless
    ``against_null`` asks for the comparison with 0.

    ``probes`` defaults to every (i, j). The SE is (1 - q^2)/sqrt(N).
    """
    if pool_pairs < 1000:
        raise InvalidParameterError(f"pool_pairs must be >= 1000, got {pool_pairs}")
    n = config.pool_size
    if probes is not None:
        probes = [(int(i), int(j)) for i, j in probes]
        for i, j in probes:
            if not (0 <= i < n and 0 <= j < n):
                raise InvalidParameterError(f"probe {(i, j)} out of range for pool size {n}")
    gen = Generator(config)
    xs = np.empty((pool_pairs, n))
    ys = np.empty((pool_pairs, n))
    prev = gen.raw_pool()
    for p in range(pool_pairs):
        if fixed_transform:
            gen.regenerate()
            prev = gen.raw_pool()
            gen.regenerate(fixed=True)
        else:
            gen.regenerate()
        cur = gen.raw_pool()
        xs[p] = prev
        ys[p] = cur
        prev = cur
    corr = correlation_matrix(xs, ys)

    q = fixed_pass_matrix(config) if fixed_transform and not against_null else None
    if probes is None:
        probes = [(i, j) for i in range(n) for j in range(n)]
    mode = "fixed" if fixed_transform else "random"
    reports = []
    for i, j in probes:
        expected = float(q[i, j]) if q is not None else 0.0
        se = (1.0 - expected * expected) / math.sqrt(pool_pairs)
        reports.append(TestReport.build(f"crosspool.{mode}.y{i}x{j}", float(corr[i, j]), expected, se, role))
    return reports


def _emitted_pool_sums(gen: Generator, pools: int) -> np.ndarray:
    mu, sigma = gen.config.out_mean, gen.config.out_sigma
    sums = np.empty(pools)
    for p in range(pools):
        values, reserved = gen.next_pool()
        z = (values - mu) / sigma
        sums[p] = float(np.dot(z, z)) + reserved * reserved
    return sums


def pool_sum_squares_test(config: GeneratorConfig, pools: int,
                          include_uncorrected: bool = True) -> list[TestReport]:
    """Per-pool sum of squares (returned values standardized, plus the held-back
    value) should behave like chi-squared with nu = n: mean nu, variance 2 nu.

    SEs come from the chi-squared model: sqrt(2 nu / N) for the mean and
    sqrt((8 nu^2 + 48 nu) / N) for the sample variance.
    """
    if pools < 1000:
        raise InvalidParameterError(f"pools must be >= 1000, got {pools}")
    nu = config.pool_size
    se_mean = math.sqrt(2.0 * nu / pools)
    se_var = math.sqrt((8.0 * nu * nu + 48.0 * nu) / pools)
    sums = _emitted_pool_sums(Generator(config), pools)
    reports = [
        TestReport.build(f"sumsq.nu={nu}.mean", float(sums.mean()), nu, se_mean),
        TestReport.build(f"sumsq.nu={nu}.variance", float(sums.var(ddof=1)), 2.0 * nu, se_var),
    ]
    if include_uncorrected:
        flat = _emitted_pool_sums(Generator(config.with_(chi2_correction=False)), pools)
        reports.append(TestReport.build(
            f"sumsq.nu={nu}.uncorrected.variance", float(flat.var(ddof=1)), 2.0 * nu, se_var, "control"))
    return reports


# -- rare-event adjacency -------------------------------------------------------------

def threshold_for_rate(pool_len: int, pool_rate: float = 0.1) -> float:
    """|x| threshold at which a pool of ``pool_len`` normals is marked with
    probability ``pool_rate``."""
    p = 1.0 - (1.0 - pool_rate) ** (1.0 / pool_len)
    return NormalDist().inv_cdf(1.0 - p / 2.0)


def rare_event_adjacency_stream(values, pool_len: int, threshold: float,
                                name: str = "rare", role: str = "check") -> TestReport:
    """Mark pools with any |value| > threshold and compare P(next marked | marked)
    with the marking rate. The statistic is their ratio (1 under independence);
    the SE is the binomial one, sqrt(r (1 - r) / M) / r for M marked pools."""
    x = np.asarray(values, dtype=np.float64)
    npools = x.shape[0] // pool_len
    if npools < 2:
        raise InvalidParameterError("need at least two pools")
    marked = (np.abs(x[: npools * pool_len].reshape(npools, pool_len)) > threshold).any(axis=1)
    rate = float(marked.mean())
    head = marked[:-1]
    m = int(head.sum())
    if m == 0 or rate in (0.0, 1.0):
        return TestReport(f"{name}.excess_ratio", math.nan, 1.0, math.nan, math.nan, "FAIL", "info")
    cond = float(marked[1:][head].mean())
    se = math.sqrt(rate * (1.0 - rate) / m) / rate
    return TestReport.build(f"{name}.excess_ratio", cond / rate, 1.0, se, role)


def rare_event_adjacency(config: GeneratorConfig, samples: int, threshold: float | None = None,
                         role: str = "info") -> TestReport:
    """Adjacency of rare events across emitted pools of the generator.

    Default ``threshold`` marks about one pool in ten. No effect size is
    asserted; by default the report is informational.
    """
    minimum = min(1_000_000, 10_000 * config.pool_size)
    if samples < minimum:
        raise InvalidParameterError(f"samples must be >= {minimum}, got {samples}")
    pool_len = config.pool_size - 1
    if threshold is None:
        threshold = threshold_for_rate(pool_len)
    if threshold < 3:
        raise InvalidParameterError(f"threshold must be >= 3, got {threshold}")
    gen = Generator(config)
    npools = samples // pool_len
    mu, sigma = config.out_mean, config.out_sigma
    z = (gen.fill(npools * pool_len) - mu) / sigma
    return rare_event_adjacency_stream(z, pool_len, threshold, f"rare.n={config.pool_size}", role)


# -- reporting ----------------------------------------------------------------------

def suite_passed(reports: Iterable[TestReport]) -> bool:
    return all(r.ok for r in reports)


def format_text(r: TestReport) -> str:
    tag = "" if r.role == "check" else f" [{r.role}]"
    return (f"{r.verdict:4s} {r.name:<40s} stat={r.statistic:.6g} expected={r.expected:.6g} "
            f"se={r.std_error:.3g} z={r.z_score:+.2f}{tag}")


def format_kv(r: TestReport) -> str:
    return (f"name={r.name},statistic={r.statistic!r},expected={r.expected!r},"
            f"se={r.std_error!r},z={r.z_score!r},verdict={r.verdict},role={r.role}")


def parse_kv(line: str) -> TestReport:
    fields = dict(part.split("=", 1) for part in line.strip().split(","))
    return TestReport(fields["name"], float(fields["statistic"]), float(fields["expected"]),
                      float(fields["se"]), float(fields["z"]), fields["verdict"],
                      fields.get("role", "check"))
