import math

import numpy as np
import pytest

from maxentrng import _pycore
from maxentrng.baselines import (
    BaselineState,
    BoxMullerState,
    boxmuller_fill,
    boxmuller_next,
    boxmuller_pair,
    exact_chi2_oracle,
    exact_chi2_samples,
    new_uniform,
    polar_fill,
    polar_next,
    uniform_fill,
    uniform_next,
)
from maxentrng.errors import InvalidParameterError
from maxentrng.stats import moment_reports


def test_splitmix64_vector():
    # reference output of splitmix64 from state 0
    assert _pycore.splitmix64(0)[1] == 0xE220A8397B1DCDAF


def test_xoshiro_reference_vector():
    u = new_uniform()
    u.set_state((1, 2, 3, 4))
    assert [u.next_u64() for _ in range(4)] == [11520, 0, 1509978240, 1215971899390074240]


def test_xoshiro_matches_independent_recurrence():
    def rotl(x, k):
        return ((x << k) | (x >> (64 - k))) & (2**64 - 1)

    u = new_uniform(123)
    s = list(u.get_state())
    for _ in range(1000):
        r = rotl(s[1] * 5 & (2**64 - 1), 7) * 9 & (2**64 - 1)
        t = s[1] << 17 & (2**64 - 1)
        s[2] ^= s[0]; s[3] ^= s[1]; s[1] ^= s[2]; s[0] ^= s[3]; s[2] ^= t; s[3] = rotl(s[3], 45)
        assert u.next_u64() == r


def test_state_rejects_all_zero():
    with pytest.raises(ValueError):
        new_uniform().set_state((0, 0, 0, 0))


def test_uniform_range_and_determinism():
    a = uniform_fill(new_uniform(5), 1_000_000)
    b = uniform_fill(new_uniform(5), 1_000_000)
    assert np.array_equal(a, b)
    assert a.min() >= 0.0 and a.max() < 1.0
    u = new_uniform(5)
    assert [uniform_next(u) for _ in range(10)] == list(a[:10])


def test_uniform_draw_counter():
    u = new_uniform(1)
    uniform_fill(u, 17)
    u.next_u64()
    assert u.draws == 18


def test_uniform_mean():
    x = uniform_fill(new_uniform(11), 10_000_000)
    assert abs(x.mean() - 0.5) <= 4.6e-4


def test_polar_acceptance_rate():
    s = BaselineState(3)
    s.fill(1_600_000)
    assert s.attempts >= 1_000_000
    assert s.pairs / s.attempts == pytest.approx(math.pi / 4, abs=0.002)


def test_polar_two_normals_per_pair():
    s = BaselineState(4)
    x = polar_next(s)
    assert s.pairs == 1 and s.cached is not None and math.isfinite(s.cached)
    cached = s.cached
    assert polar_next(s) == cached and s.cached is None and s.pairs == 1
    assert math.isfinite(x)
    polar_fill(s, 1000)
    assert s.pairs == 501


def test_polar_uniforms_per_normal():
    s = BaselineState(8)
    s.fill(1_000_000)
    per = s.uniform.draws / 1_000_000
    assert 1.2 <= per <= 1.35
    assert per == pytest.approx(4 / math.pi, abs=0.01)


def test_polar_shared_uniform():
    u = new_uniform(2)
    s = BaselineState(uniform=u)
    s.fill(10)
    assert u.draws == s.uniform.draws >= 10


@pytest.mark.parametrize("state_cls", [BaselineState, BoxMullerState])
def test_baseline_moments(state_cls):
    x = state_cls(2024).fill(10_000_000)
    reps = moment_reports(x)
    assert all(r.passed for r in reps), [str(r) for r in reps]
    assert abs(x.mean()) <= 1.6e-3 and abs(x.var() - 1) <= 2.3e-3


def test_boxmuller_pair_examples():
    assert boxmuller_pair(1.0, 0.37) == (0.0, 0.0)
    y1, y2 = boxmuller_pair(math.exp(-2), 0.0)
    assert y1 == pytest.approx(2.0, abs=1e-15) and y2 == 0.0


@pytest.mark.parametrize("u1, u2", [(0.0, 0.5), (-0.1, 0.5), (0.5, 1.0), (1.5, 0.0)])
def test_boxmuller_pair_domain(u1, u2):
    with pytest.raises(InvalidParameterError):
        boxmuller_pair(u1, u2)


def test_boxmuller_stream_uses_pair_formula():
    s = BoxMullerState(6)
    u = new_uniform(6)
    for _ in range(200):
        u1, u2 = u.next_double(), u.next_double()
        y1, y2 = boxmuller_pair(u1 or 2.0**-53, u2)
        assert boxmuller_next(s) == y1
        assert boxmuller_next(s) == y2


def test_boxmuller_zero_uniform_guard():
    # the second output from state (1, 2, 3, 4) is 0, which hits the u1 = 0 guard
    u = new_uniform()
    u.set_state((1, 2, 3, 4))
    u.next_u64()
    s = BoxMullerState(uniform=u)
    x = boxmuller_fill(s, 2)
    assert np.all(np.isfinite(x))
    assert abs(x[0]) == pytest.approx(math.sqrt(-2 * math.log(2.0**-53)), rel=1e-12)


def test_boxmuller_pair_independence():
    x = BoxMullerState(9).fill(20_000_000).reshape(-1, 2)
    r = np.corrcoef(x[:, 0], x[:, 1])[0, 1]
    assert abs(r) <= 1.6e-3


def test_exact_chi2_oracle():
    s = BaselineState(10)
    one = np.array([exact_chi2_oracle(1, s) for _ in range(100_000)])
    assert abs(one.mean() - 1) <= 5 * math.sqrt(2 / 1e5)
    big = exact_chi2_samples(1024, 10_000, BaselineState(12))
    assert abs(big.mean() - 1024) <= 5 * math.sqrt(2 * 1024 / 1e4)
    assert one.min() > 0 and big.min() > 0


def test_exact_chi2_errors():
    with pytest.raises(InvalidParameterError):
        exact_chi2_oracle(0, BaselineState())
