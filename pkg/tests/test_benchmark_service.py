import numpy as np
import pytest
from core.errors import EmptyPrefixError, InvalidConfigError, ShapeMismatchError
from data.models import BenchmarkKind, FunctionalSeries
from services.benchmark_service import (
    auxiliary_bandwidth,
    benchmark_fixed,
    benchmark_initial,
    benchmark_prefix_mean,
)
from tests.conftest import make_series


def test_auxiliary_bandwidth():
    assert auxiliary_bandwidth(0.2) == pytest.approx(0.2615, abs=1e-4)
    assert auxiliary_bandwidth(0.2) > 0.2


def test_initial_mean_on_constant_data(constant_series):
    bench = benchmark_initial(constant_series, 0.2)
    assert bench.kind == BenchmarkKind.INITIAL
    assert np.allclose(bench.values, constant_series.values[0], atol=1e-9)


def test_initial_mean_on_affine_data(affine_series):
    h = 0.2
    bench = benchmark_initial(affine_series, h)
    s = affine_series.s_grid
    expected = 1.0 + s + (2.0 - s) * auxiliary_bandwidth(h)
    assert bench.parameter == pytest.approx(auxiliary_bandwidth(h))
    assert np.allclose(bench.values, expected, atol=1e-9, rtol=0)


def test_prefix_mean_of_a_ramp():
    series = make_series(lambda t, s: t + 0.0 * s, 100)
    bench = benchmark_prefix_mean(series, 0.25)
    assert np.allclose(bench.values, 0.13, atol=1e-12)


def test_prefix_mean_divides_by_n_x0(constant_series):
    # 60 * 0.1 = 6 curves, divisor 6
    assert np.allclose(benchmark_prefix_mean(constant_series, 0.1).values, 3.0, atol=1e-12)
    # 60 * 0.11 = 6.6: six curves over 6.6
    assert np.allclose(benchmark_prefix_mean(constant_series, 0.11).values, 3.0 * 6 / 6.6, atol=1e-12)


def test_prefix_of_one_curve(mu1_series):
    bench = benchmark_prefix_mean(mu1_series, 1 / mu1_series.n)
    assert np.allclose(bench.values, mu1_series.values[0], atol=1e-12)


def test_prefix_mean_is_linear(mu1_series):
    other = make_series(lambda t, s: np.cos(t) * s, mu1_series.n, mu1_series.N)
    combo = FunctionalSeries(values=2.0 * mu1_series.values - 3.0 * other.values, s_grid=mu1_series.s_grid)
    lhs = benchmark_prefix_mean(combo, 0.3).values
    rhs = 2.0 * benchmark_prefix_mean(mu1_series, 0.3).values - 3.0 * benchmark_prefix_mean(other, 0.3).values
    assert np.allclose(lhs, rhs, atol=1e-12)


def test_prefix_errors(constant_series):
    with pytest.raises(EmptyPrefixError):
        benchmark_prefix_mean(constant_series, 0.01)
    with pytest.raises(InvalidConfigError):
        benchmark_prefix_mean(constant_series, 0.0)


def test_fixed_benchmark(constant_series):
    bench = benchmark_fixed(constant_series, [1, 2, 3, 4, 5])
    assert bench.kind == BenchmarkKind.FIXED
    assert bench.values.tolist() == [1.0, 2.0, 3.0, 4.0, 5.0]
    with pytest.raises(ShapeMismatchError):
        benchmark_fixed(constant_series, [1.0, 2.0])
