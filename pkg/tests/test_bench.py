import pytest

from maxentrng.bench import METHODS, make_filler, run_bench, time_method


def test_uniform_row_first_and_normalized():
    with pytest.warns(UserWarning, match="widened"):
        rows = run_bench(["polar"], 20_000, repeats=1)
    assert [r.generator_name for r in rows] == ["uniform", "polar"]
    assert rows[0].relative == 1.0 and rows[0].repeats == 11
    for r in rows:
        assert r.elapsed > 0 and r.throughput == pytest.approx(r.samples / r.elapsed)
        assert len(r.runs) == r.repeats


@pytest.mark.parametrize("method", METHODS)
def test_every_method_times(method):
    assert time_method(method, 70_000) > 0


def test_unknown_method():
    with pytest.raises(ValueError):
        make_filler("ziggurat")
