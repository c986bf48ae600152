import numpy as np
import pytest
from scipy.integrate import quad
from services.kernel_service import KernelSpec, TRIWEIGHT, kernel_eval, kernel_star_eval, qs_weight


def test_triweight_values():
    assert kernel_eval(0.0) == pytest.approx(1.09375, abs=1e-15)
    assert kernel_eval(1.0) == 0.0
    assert kernel_eval(0.5) == pytest.approx(0.46142578125, abs=1e-15)
    assert kernel_eval(1.5) == 0.0


def test_star_kernel_values():
    assert kernel_star_eval(0.0) == pytest.approx((2 * np.sqrt(2) - 1) * 35 / 32, abs=1e-12)
    assert kernel_star_eval(0.0) == pytest.approx(1.999844, abs=1e-6)
    assert kernel_star_eval(1.0) == 0.0
    assert kernel_star_eval(0.8) == pytest.approx(-(35 / 32) * 0.36 ** 3, abs=1e-12)


@pytest.mark.parametrize("fn", [kernel_eval, kernel_star_eval])
def test_kernels_integrate_to_one(fn):
    value, _ = quad(fn, -1.0, 1.0, points=[-1 / np.sqrt(2), 0.0, 1 / np.sqrt(2)], epsabs=1e-12)
    assert value == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("fn", [kernel_eval, kernel_star_eval])
def test_kernels_are_even_and_vanish_outside_support(fn):
    x = np.linspace(0.0, 2.0, 401)
    assert np.array_equal(fn(x), fn(-x))
    assert np.all(fn(x[x > 1.0]) == 0.0)


def test_qs_weight_at_origin_and_tail():
    assert qs_weight(0.0) == 1.0
    assert abs(qs_weight(10.0)) < 0.01


def test_qs_weight_matches_series_near_origin():
    x = np.linspace(-1e-3, 1e-3, 41)
    z2 = (6 * np.pi * x / 5) ** 2
    series = 1 - z2 / 10 + z2 ** 2 / 280 - z2 ** 3 / 15120 + z2 ** 4 / 1330560
    assert np.allclose(qs_weight(x), series, atol=1e-10, rtol=0)


def test_qs_weight_is_continuous_across_the_series_switch():
    z = np.array([0.999e-2, 1.001e-2])
    x = 5 * z / (6 * np.pi)
    a, b = qs_weight(x)
    assert abs(a - b) < 1e-8


def test_table_kernel_reproduces_triweight():
    x = np.linspace(-1.0, 1.0, 4001)
    table = KernelSpec.from_table(x, TRIWEIGHT(x))
    grid = np.linspace(-0.99, 0.99, 17)
    assert np.allclose(table(grid), TRIWEIGHT(grid), atol=1e-5)
    assert table(1.2) == 0.0


def test_table_kernel_is_symmetrised_and_normalised():
    x = np.array([-1.0, -0.5, 0.0, 0.5, 1.0])
    y = np.array([0.0, 2.0, 4.0, 0.0, 0.0])
    kernel = KernelSpec.from_table(x, y)
    assert kernel(0.5) == pytest.approx(kernel(-0.5))
    value, _ = quad(kernel, -1, 1, points=[-0.5, 0.0, 0.5])
    assert value == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("x, y", [
    ([-2.0, 0.0, 2.0], [0.0, 1.0, 0.0]),
    ([-1.0, 0.0, 1.0], [1.0, 0.0, 1.0]),
    ([-1.0, 0.0], [0.0, 1.0]),
])
def test_table_kernel_rejects_bad_tables(x, y):
    with pytest.raises(ValueError):
        KernelSpec.from_table(x, y)
