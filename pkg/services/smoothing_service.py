from typing import Tuple
import logging
import numpy as np
from core.errors import (
    DegenerateDesignError,
    EmptyWindowError,
    InvalidConfigError,
    ShapeMismatchError,
)
from data.models import FunctionalSeries, MeanSurface, ResidualMatrix
from services.kernel_service import SQRT2, TRIWEIGHT, KernelSpec

logger = logging.getLogger(__name__)

# Membership tolerance for design points on the window boundary.
GRID_TOL = 1e-12
DEGENERACY_TOL = 1e-14


def check_bandwidth(h: float, upper: float = 0.5) -> None:
    if not 0 < h < upper:
        raise InvalidConfigError(f"bandwidth must lie in (0, {upper}), got {h}")


def local_linear_weight_matrix(
        t_values: np.ndarray,
        design: np.ndarray,
        h: float,
        kernel: KernelSpec = TRIWEIGHT
) -> np.ndarray:
    """Local linear weights, one row per evaluation time, one column per design point."""
    t_values = np.atleast_1d(np.asarray(t_values, dtype=float))
    design = np.asarray(design, dtype=float)
    d = design[None, :] - t_values[:, None]
    k = np.asarray(kernel(d / h))
    s0 = k.sum(axis=1)
    s1 = (k * d).sum(axis=1)
    s2 = (k * d * d).sum(axis=1)
    det = s0 * s2 - s1 * s1
    bad = (s0 <= 0) | (det <= DEGENERACY_TOL * s0 * h * h)
    if np.any(bad):
        t_bad = t_values[np.argmax(bad)]
        logger.debug(f"Degenerate local linear design at t={t_bad}, h={h}")
        raise DegenerateDesignError(
            f"local linear design is degenerate at t={t_bad:.6g} with h={h:.6g}"
        )
    return k * (s2[:, None] - d * s1[:, None]) / det[:, None]


def local_linear_weights(t: float, h: float, n: int, kernel: KernelSpec = TRIWEIGHT) -> np.ndarray:
    """Weights w_j(t, h) on the design j/n, j = 1..n."""
    design = np.arange(1, n + 1) / n
    return local_linear_weight_matrix(np.array([t]), design, h, kernel)[0]


def bias_corrected_weight_matrix(
        t_values: np.ndarray,
        design: np.ndarray,
        h: float,
        kernel: KernelSpec = TRIWEIGHT
) -> np.ndarray:
    """Weights of 2 * mu_hat(h / sqrt 2) - mu_hat(h)."""
    return (2.0 * local_linear_weight_matrix(t_values, design, h / SQRT2, kernel)
            - local_linear_weight_matrix(t_values, design, h, kernel))


def evaluation_window(x0: float, x1: float, h: float) -> Tuple[float, float]:
    return max(x0, h), min(x1, 1.0 - h)


def evaluation_times(n: int, x0: float, x1: float, h: float) -> np.ndarray:
    """Design points j/n inside the trimmed window I_n."""
    lo, hi = evaluation_window(x0, x1, h)
    design = np.arange(1, n + 1) / n
    t_grid = design[(design >= lo - GRID_TOL) & (design <= hi + GRID_TOL)]
    if lo > hi or t_grid.size == 0:
        raise EmptyWindowError(f"trimmed window [{lo:.6g}, {hi:.6g}] holds no design point for n={n}")
    return t_grid


def local_linear_fit(series: FunctionalSeries, t_values: np.ndarray, h: float,
                     kernel: KernelSpec = TRIWEIGHT) -> np.ndarray:
    """Uncorrected estimate mu_hat_h(t, s_i) for each t."""
    return local_linear_weight_matrix(t_values, series.design, h, kernel) @ series.values


def bias_corrected_surface(
        series: FunctionalSeries,
        h: float,
        window: Tuple[float, float] = (0.0, 1.0),
        kernel: KernelSpec = TRIWEIGHT
) -> MeanSurface:
    """Jackknife-corrected local linear surface on the design points of I_n."""
    check_bandwidth(h)
    x0, x1 = window
    if not x0 < x1:
        raise InvalidConfigError(f"window requires x0 < x1, got [{x0}, {x1}]")
    t_grid = evaluation_times(series.n, x0, x1, h)
    weights = bias_corrected_weight_matrix(t_grid, series.design, h, kernel)
    values = weights @ series.values
    logger.debug(f"Surface on {t_grid.size} times x {series.N} points with h={h:.4g}")
    return MeanSurface(
        values=values,
        t_grid=t_grid,
        s_grid=series.s_grid,
        bandwidth=h,
        window=(x0, x1),
        n=series.n,
    )


def residuals(series: FunctionalSeries, surface: MeanSurface) -> ResidualMatrix:
    """X_j - mu_tilde(j/n); rows outside I_n use the nearest boundary row and are flagged."""
    if surface.n != series.n or not np.array_equal(surface.s_grid, series.s_grid):
        raise ShapeMismatchError(
            f"surface built for n={surface.n}, N={surface.s_grid.size}; "
            f"series has n={series.n}, N={series.N}"
        )
    rows = np.rint(surface.t_grid * series.n).astype(int) - 1
    position = np.clip(np.searchsorted(rows, np.arange(series.n)), 0, rows.size - 1)
    fitted = surface.values[position]
    extrapolated = ~np.isin(np.arange(series.n), rows)
    if extrapolated.any():
        logger.debug(f"{int(extrapolated.sum())} residual rows use boundary evaluation")
    return ResidualMatrix(
        values=series.values - fitted,
        extrapolated=extrapolated,
        s_grid=series.s_grid,
    )
