import numpy as np
import pytest
from core.errors import DegenerateDesignError, EmptyWindowError, InvalidConfigError, ShapeMismatchError
from data.models import FunctionalSeries
from services.kernel_service import triweight
from services.smoothing_service import (
    bias_corrected_surface,
    evaluation_times,
    local_linear_fit,
    local_linear_weight_matrix,
    local_linear_weights,
    residuals,
)
from tests.conftest import make_series


def test_weight_identities_at_random_points(rng):
    for _ in range(100):
        n = int(rng.integers(100, 400))
        h = float(rng.uniform(0.1, 0.45))
        t = float(rng.uniform(0.0, 1.0))
        w = local_linear_weights(t, h, n)
        x = np.arange(1, n + 1) / n
        assert w.sum() == pytest.approx(1.0, abs=1e-10)
        assert w @ (x - t) == pytest.approx(0.0, abs=1e-10)


def test_weights_match_weighted_least_squares():
    n, h, t = 5, 0.5, 0.5
    x = np.arange(1, n + 1) / n
    k = triweight((x - t) / h)
    design = np.column_stack([np.ones(n), x - t])
    # first row of (D' K D)^-1 D' K
    solve = np.linalg.solve(design.T @ (k[:, None] * design), design.T * k)
    assert np.allclose(local_linear_weights(t, h, n), solve[0], atol=1e-12, rtol=0)


def test_degenerate_design_raises():
    with pytest.raises(DegenerateDesignError):
        local_linear_weights(0.5, 0.001, 100)


def test_weight_matrix_on_irregular_design():
    design = np.array([0.1, 0.15, 0.3, 0.32, 0.5, 0.7, 0.71, 0.9])
    w = local_linear_weight_matrix(np.array([0.3, 0.5]), design, 0.4)
    assert np.allclose(w.sum(axis=1), 1.0, atol=1e-12)
    assert np.allclose(w @ (3.0 - 2.0 * design), [3.0 - 0.6, 3.0 - 1.0], atol=1e-12)


def test_evaluation_times_include_window_edges():
    t = evaluation_times(100, 0.0, 1.0, 0.1)
    assert t.size == 81
    assert t[0] == pytest.approx(0.1)
    assert t[-1] == pytest.approx(0.9)


def test_empty_window_raises():
    with pytest.raises(EmptyWindowError):
        evaluation_times(100, 0.6, 0.65, 0.45)


def test_constant_and_affine_data_are_reproduced(constant_series, affine_series):
    surface = bias_corrected_surface(constant_series, 0.2)
    assert np.allclose(surface.values, 3.0, atol=1e-12)

    surface = bias_corrected_surface(affine_series, 0.15, (0.2, 0.9))
    s = affine_series.s_grid
    truth = 1.0 + s[None, :] + (2.0 - s[None, :]) * surface.t_grid[:, None]
    assert np.allclose(surface.values, truth, atol=1e-9, rtol=0)
    assert surface.t_grid[0] >= 0.2 - 1e-12 and surface.t_grid[-1] <= 0.85 + 1e-12
    fitted = local_linear_fit(affine_series, surface.t_grid, 0.15)
    assert np.allclose(fitted, truth, atol=1e-9, rtol=0)


def _max_error(fit, truth, t_grid, lo=0.3, hi=0.7):
    keep = (t_grid >= lo) & (t_grid <= hi)
    return np.abs(fit - truth)[keep].max()


def test_corrected_estimator_has_higher_order_bias():
    n = 2000
    series = make_series(lambda t, s: np.sin(3.0 * t) + 0.0 * s, n, N=2)
    errors = []
    for h in (0.2, 0.1):
        surface = bias_corrected_surface(series, h)
        errors.append(_max_error(surface.values[:, 0], np.sin(3.0 * surface.t_grid), surface.t_grid))
    assert errors[0] / errors[1] >= 6.0


def test_plain_estimator_bias_is_quadratic_in_h():
    n = 2000
    series = make_series(lambda t, s: t ** 2 + 0.0 * s, n, N=2)
    errors = []
    for h in (0.2, 0.1):
        t_grid = evaluation_times(n, 0.0, 1.0, h)
        fit = local_linear_fit(series, t_grid, h)[:, 0]
        errors.append(_max_error(fit, t_grid ** 2, t_grid))
    assert 3.6 <= errors[0] / errors[1] <= 4.4

    # the jackknife removes the quadratic term entirely
    surface = bias_corrected_surface(series, 0.2)
    assert _max_error(surface.values[:, 0], surface.t_grid ** 2, surface.t_grid) < 1e-5


def test_surface_rejects_bad_bandwidth(constant_series):
    with pytest.raises(InvalidConfigError):
        bias_corrected_surface(constant_series, 0.5)


def test_residuals_vanish_on_affine_data(affine_series):
    surface = bias_corrected_surface(affine_series, 0.15)
    res = residuals(affine_series, surface)
    assert res.values.shape == affine_series.values.shape
    inside = ~res.extrapolated
    assert np.allclose(res.values[inside], 0.0, atol=1e-9)
    assert res.extrapolated.sum() == affine_series.n - surface.t_grid.size


def test_residuals_match_brute_force(mu1_series):
    surface = bias_corrected_surface(mu1_series, 0.15)
    res = residuals(mu1_series, surface)
    n = mu1_series.n
    for j in range(1, n + 1):
        nearest = int(np.argmin(np.abs(surface.t_grid - j / n)))
        expected = mu1_series.values[j - 1] - surface.values[nearest]
        assert np.array_equal(res.values[j - 1], expected)
        inside = surface.t_grid[0] - 1e-12 <= j / n <= surface.t_grid[-1] + 1e-12
        assert res.extrapolated[j - 1] == (not inside)


def test_residuals_need_matching_series(mu1_series, constant_series):
    surface = bias_corrected_surface(mu1_series, 0.15)
    with pytest.raises(ShapeMismatchError):
        residuals(constant_series, surface)


def test_series_validation():
    with pytest.raises(ValueError):
        FunctionalSeries(values=[[1.0, 2.0], [3.0, np.nan]], s_grid=[0.0, 1.0])
    with pytest.raises(ValueError):
        FunctionalSeries(values=[[1.0, 2.0], [3.0, 4.0]], s_grid=[1.0, 0.0])
    with pytest.raises(ValueError):
        FunctionalSeries(values=[[1.0, 2.0], [3.0, 4.0]], s_grid=[0.0, 1.0], labels=["a"])
