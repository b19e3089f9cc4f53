import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from maxentrng.baselines import BaselineState
from maxentrng.errors import InvalidParameterError
from maxentrng.generator import Generator, GeneratorConfig, Mixing, TransformFamily
from maxentrng.stats import (
    TestReport,
    correlation_matrix,
    cross_pool_correlation,
    fixed_pass_matrix,
    format_kv,
    format_text,
    moment_reports,
    moments,
    parse_kv,
    pool_sum_squares_test,
    rare_event_adjacency,
    rare_event_adjacency_stream,
    squared_correlation_model,
    suite_passed,
    threshold_for_rate,
)

COMBOS = [(f, m) for f in TransformFamily for m in Mixing]
small_cfg = GeneratorConfig(pool_size=64, seed=12345)


def naive_moments(x):
    x = np.asarray(x, dtype=np.float64)
    n = len(x)
    m = x.mean()
    d = x - m
    m2, m3, m4 = (d**2).sum(), (d**3).sum(), (d**4).sum()
    return m, m2 / (n - 1), math.sqrt(n) * m3 / m2**1.5, n * m4 / m2**2 - 3


# -- moments -------------------------------------------------------------------------

def test_moments_examples():
    m = moments([1, 1, 1, 1])
    assert (m.count, m.mean, m.variance) == (4, 1.0, 0.0)
    m = moments([-1, 1])
    assert (m.mean, m.variance) == (0.0, 2.0)


@pytest.mark.parametrize("bad", [[], [3.0]])
def test_moments_need_two(bad):
    with pytest.raises(InvalidParameterError):
        moments(bad)


def test_moments_match_two_pass_oracle_across_chunks():
    rng = np.random.default_rng(1)
    x = rng.gamma(2.0, size=300_001) + 1e6  # offset stresses cancellation
    got = moments(x)
    want = naive_moments(x)
    assert got.mean == pytest.approx(want[0], rel=1e-14)
    assert got.variance == pytest.approx(want[1], rel=1e-9)
    assert got.skewness == pytest.approx(want[2], rel=1e-7)
    assert got.excess_kurtosis == pytest.approx(want[3], rel=1e-7)


@settings(max_examples=50)
@given(st.lists(st.floats(-1e3, 1e3), min_size=3, max_size=200).filter(lambda v: np.ptp(v) > 1e-3),
       st.floats(0.01, 100), st.floats(-100, 100))
def test_moments_affine_equivariance(v, a, b):
    x = np.array(v)
    m0, m1 = moments(x), moments(a * x + b)
    assert m1.mean == pytest.approx(a * m0.mean + b, rel=1e-9, abs=1e-9 * (abs(b) + a * np.abs(x).max()))
    assert m1.variance == pytest.approx(a * a * m0.variance, rel=1e-9)
    assert m1.skewness == pytest.approx(m0.skewness, rel=1e-9, abs=1e-9)
    assert m1.excess_kurtosis == pytest.approx(m0.excess_kurtosis, rel=1e-9, abs=1e-9)


@settings(max_examples=30)
@given(st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=300), st.randoms())
def test_moments_permutation_invariant(v, rnd):
    w = list(v)
    rnd.shuffle(w)
    a, b = moments(v), moments(w)
    assert a.mean == pytest.approx(b.mean, rel=1e-12, abs=1e-9)
    assert a.variance == pytest.approx(b.variance, rel=1e-9, abs=1e-9)


def test_moment_reports_standard_errors():
    x = BaselineState(1).fill(1_000_000)
    reps = moment_reports(x)
    ses = [r.std_error for r in reps]
    n = 1e6
    assert ses == pytest.approx([1 / math.sqrt(n), math.sqrt(2 / n), math.sqrt(6 / n), math.sqrt(24 / n)])
    assert all(r.passed for r in reps)


def test_moment_reports_detect_wrong_variance():
    x = 1.01 * BaselineState(1).fill(1_000_000)
    by = {r.name: r for r in moment_reports(x)}
    assert not by["moments.variance"].passed and by["moments.mean"].passed


# -- TestReport --------------------------------------------------------------------------

@given(st.floats(-1e6, 1e6), st.floats(-1e6, 1e6), st.floats(1e-6, 1e6))
def test_report_internal_consistency(stat, exp, se):
    r = TestReport.build("x", stat, exp, se)
    assert r.z_score == pytest.approx((stat - exp) / se, rel=1e-12, abs=1e-12)
    assert r.passed == (abs(r.z_score) <= 5)


def test_report_boundaries_and_roles():
    assert TestReport.build("a", 5.0, 0.0, 1.0).passed
    assert not TestReport.build("a", 5.0001, 0.0, 1.0).passed
    assert TestReport.build("a", 1.0, 1.0, 0.0).passed
    assert not TestReport.build("a", 1.5, 1.0, 0.0).passed
    ctl = TestReport.build("c", 100.0, 0.0, 1.0, role="control")
    info = TestReport.build("i", 100.0, 0.0, 1.0, role="info")
    ok = TestReport.build("k", 0.0, 0.0, 1.0)
    assert ctl.ok and info.ok and ok.ok
    assert suite_passed([ctl, info, ok])
    assert not suite_passed([ok, TestReport.build("c", 0.0, 0.0, 1.0, role="control")])
    with pytest.raises(InvalidParameterError):
        TestReport.build("x", 0, 0, 1, role="gate")


@given(st.text(alphabet=st.characters(blacklist_characters=",\n\r", blacklist_categories=("Cs",)), min_size=1),
       st.floats(allow_nan=False, allow_infinity=False), st.floats(allow_nan=False, allow_infinity=False),
       st.floats(0, 1e300), st.sampled_from(["check", "control", "info"]))
def test_kv_round_trip(name, stat, exp, se, role):
    r = TestReport.build(name.strip() or "n", stat, exp, se, role)
    back = parse_kv(format_kv(r))
    assert back.name == r.name and back.verdict == r.verdict and back.role == r.role
    assert back.statistic == r.statistic and back.expected == r.expected and back.std_error == r.std_error
    assert back.z_score == r.z_score or (math.isnan(back.z_score) and math.isnan(r.z_score))


def test_kv_and_text_layout():
    r = TestReport.build("moments.mean", 0.001, 0.0, 0.001)
    kv = format_kv(r)
    assert [p.split("=")[0] for p in kv.split(",")] == ["name", "statistic", "expected", "se", "z", "verdict", "role"]
    assert format_text(r).startswith("PASS moments.mean")
    assert "[control]" in format_text(TestReport.build("c", 0, 0, 1, role="control"))


# -- squared-value correlation ----------------------------------------------------------------

def test_squared_correlation_is_two():
    r = squared_correlation_model(1_000_000, seed=3)
    assert r.passed and r.expected == 2.0
    # Var(x1^2 y1^2) = E(x1^4 y1^4) - 4 = (105*3 + 90 + 9*3)/8 - 4 = 50
    assert r.std_error == pytest.approx(math.sqrt(50 / 1e6), rel=0.1)
    assert abs(r.statistic - 1.0) > 100 * r.std_error  # clearly not E(x^2)E(y^2)


@pytest.mark.parametrize("theta, expected", [(0.0, 3.0), (math.pi / 2, 1.0)])
def test_squared_correlation_pinned_angles(theta, expected):
    r = squared_correlation_model(1_000_000, theta=theta, seed=4)
    assert r.expected == pytest.approx(expected, abs=1e-15)
    assert r.passed


def test_squared_correlation_shared_uniform():
    from maxentrng.baselines import new_uniform

    u = new_uniform(8)
    squared_correlation_model(10_000, u=u)
    assert u.draws > 30_000


def test_squared_correlation_min_trials():
    with pytest.raises(InvalidParameterError):
        squared_correlation_model(9_999)


# -- cross-pool correlation -------------------------------------------------------------------

@pytest.mark.parametrize("family, mixing", COMBOS)
def test_fixed_pass_matrix_matches_kernel(family, mixing):
    cfg = GeneratorConfig(pool_size=64, transform_family=family, mixing=mixing)
    q = fixed_pass_matrix(cfg)
    assert np.allclose(q.T @ q, np.eye(64), atol=1e-14)
    g = Generator(cfg)
    for j in range(64):
        e = np.zeros(64)
        e[j] = 1.0
        g.set_raw_pool(e)
        g.regenerate(fixed=True)
        assert np.allclose(g.raw_pool(), q[:, j], atol=1e-15)


def test_correlation_matrix_oracle_and_guard():
    rng = np.random.default_rng(3)
    xs, ys = rng.standard_normal((500, 3)), rng.standard_normal((500, 2))
    c = correlation_matrix(xs, ys)
    assert c[1, 2] == pytest.approx(np.corrcoef(ys[:, 1], xs[:, 2])[0, 1], rel=1e-12)
    with pytest.raises(InvalidParameterError):
        correlation_matrix(np.ones((100, 4)), ys[:100])


@pytest.mark.parametrize("family, mixing", COMBOS)
def test_randomized_cross_pool_uncorrelated(family, mixing):
    cfg = small_cfg.with_(transform_family=family, mixing=mixing)
    reps = cross_pool_correlation(cfg, 20_000)
    assert len(reps) == 64 * 64
    assert all(r.passed for r in reps)
    z = np.array([r.z_score for r in reps])
    assert 0.9 <= z.std() <= 1.1


@pytest.mark.parametrize("family, mixing", COMBOS)
def test_fixed_transform_reproduces_q(family, mixing):
    cfg = small_cfg.with_(transform_family=family, mixing=mixing)
    q = fixed_pass_matrix(cfg)
    reps = cross_pool_correlation(cfg, 20_000, fixed_transform=True)
    assert all(r.passed for r in reps)
    i, j = np.unravel_index(np.abs(q).argmax(), q.shape)
    hit = reps[i * 64 + j]
    assert hit.expected == q[i, j] and abs(hit.statistic) > 10 / math.sqrt(20_000)


def test_fixed_transform_fails_against_null():
    reps = cross_pool_correlation(small_cfg, 5000, probes=[(0, 0), (1, 2)], fixed_transform=True, against_null=True)
    assert max(abs(r.statistic) for r in reps) > 10 / math.sqrt(5000)
    assert not suite_passed(reps)


def test_known_half_entry_probe():
    q = fixed_pass_matrix(small_cfg)
    i, j = map(int, np.argwhere(np.abs(q) == 0.5)[0])
    (r,) = cross_pool_correlation(small_cfg, 20_000, probes=[(i, j)], fixed_transform=True)
    assert abs(r.expected) == 0.5 and r.passed


@pytest.mark.parametrize("probe", [(64, 0), (0, -1)])
def test_cross_pool_probe_range(probe):
    with pytest.raises(InvalidParameterError):
        cross_pool_correlation(small_cfg, 1000, probes=[probe])


def test_cross_pool_min_pairs():
    with pytest.raises(InvalidParameterError):
        cross_pool_correlation(small_cfg, 999)


# -- pool sum of squares ------------------------------------------------------------------------

def test_pool_sum_squares_default_config():
    reps = {r.name: r for r in pool_sum_squares_test(GeneratorConfig(seed=12345), 10_000)}
    assert reps["sumsq.nu=1024.mean"].passed
    assert reps["sumsq.nu=1024.variance"].passed
    ctl = reps["sumsq.nu=1024.uncorrected.variance"]
    assert ctl.role == "control" and not ctl.passed and ctl.z_score < -5
    assert ctl.statistic < 1e-6
    assert suite_passed(reps.values())


def test_pool_sum_squares_small_pool():
    reps = pool_sum_squares_test(GeneratorConfig(pool_size=64, seed=5), 10_000, include_uncorrected=False)
    assert len(reps) == 2 and all(r.passed for r in reps)
    assert reps[1].statistic == pytest.approx(128, rel=0.1)


def test_pool_sum_squares_min_pools():
    with pytest.raises(InvalidParameterError):
        pool_sum_squares_test(small_cfg, 999)


# -- rare-event adjacency ------------------------------------------------------------------------

def test_threshold_marks_one_pool_in_ten():
    t = threshold_for_rate(64)
    x = BaselineState(2).fill(64 * 100_000).reshape(-1, 64)
    assert (np.abs(x) > t).any(axis=1).mean() == pytest.approx(0.1, abs=0.005)


def test_rare_event_null_control():
    x = BaselineState(12345).fill(10_000_000)
    r = rare_event_adjacency_stream(x, 64, 3.5, "rare.polar")
    assert r.passed and abs(r.statistic - 1) <= 5 * r.std_error


def test_rare_event_detects_planted_clustering():
    rng = np.random.default_rng(0)
    marks = rng.random(100_000) < 0.05
    marks[1:] |= marks[:-1] & (rng.random(99_999) < 0.5)
    x = np.zeros((100_000, 16))
    x[marks, 0] = 10.0
    r = rare_event_adjacency_stream(x.ravel(), 16, 5.0)
    assert not r.passed and r.statistic > 2


def test_rare_event_degenerate_threshold():
    r = rare_event_adjacency_stream(np.zeros(6400), 64, math.inf)
    assert math.isnan(r.statistic) and r.role == "info" and r.ok


def test_rare_event_generator_report():
    cfg = GeneratorConfig(pool_size=64, seed=12345)
    r = rare_event_adjacency(cfg, 10_000 * 64)
    assert r.name == "rare.n=64.excess_ratio" and r.role == "info"
    assert math.isfinite(r.statistic) and r.std_error > 0 and r.verdict in ("PASS", "FAIL")


def test_rare_event_preconditions():
    with pytest.raises(InvalidParameterError):
        rare_event_adjacency(small_cfg, 1000)
    with pytest.raises(InvalidParameterError):
        rare_event_adjacency(small_cfg, 640_000, threshold=2.5)


def test_rare_event_clustering_and_discard_mitigation():
    # n=64 pools: large values leak into the next pool; every third pool hides it
    base = GeneratorConfig(pool_size=64, seed=12345)
    hit = rare_event_adjacency(base, 640_000)
    cured = rare_event_adjacency(base.with_(discard_every=3), 640_000)
    assert hit.statistic > 1.3 and hit.z_score > 5
    assert cured.passed
