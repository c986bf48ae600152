from typing import Optional, Tuple
import logging
import math
import numpy as np
from core.config import settings
from core.errors import InvalidConfigError, ShapeMismatchError
from data.models import BenchmarkEstimate, DeviationSurface, ExtremalSet, MeanSurface

logger = logging.getLogger(__name__)


def default_rho(n: int, h: float, scale: Optional[float] = None) -> float:
    """rho_n = scale * log(n) / sqrt(n h)."""
    scale = settings.RHO_SCALE if scale is None else scale
    return scale * math.log(n) / math.sqrt(n * h)


def deviation_from_values(
        values: np.ndarray,
        t_grid: np.ndarray,
        s_grid: np.ndarray,
        window: Tuple[float, float],
        bandwidth: float,
        n: int
) -> DeviationSurface:
    """Wrap a deviation matrix with its supremum and every point attaining it."""
    magnitude = np.abs(values)
    sup = float(magnitude.max())
    ti, si = np.nonzero(magnitude == sup)
    return DeviationSurface(
        values=values,
        t_grid=t_grid,
        s_grid=s_grid,
        sup=sup,
        argmax=list(zip(ti.tolist(), si.tolist())),
        window=window,
        bandwidth=bandwidth,
        n=n,
    )


def deviation_surface(surface: MeanSurface, bench: BenchmarkEstimate) -> DeviationSurface:
    if not np.array_equal(surface.s_grid, bench.s_grid):
        raise ShapeMismatchError(
            f"surface has {surface.s_grid.size} points, benchmark has {bench.s_grid.size}"
        )
    return deviation_from_values(
        surface.values - bench.values[None, :],
        surface.t_grid,
        surface.s_grid,
        surface.window,
        surface.bandwidth,
        surface.n,
    )


def extremal_set(dev: DeviationSurface, rho: float) -> ExtremalSet:
    """Grid points where +d or -d comes within rho of the supremum of |d|."""
    if rho < 0:
        raise InvalidConfigError(f"rho must be nonnegative, got {rho}")
    level = dev.sup - rho
    plus = dev.values >= level
    minus = -dev.values >= level
    ext = ExtremalSet(plus=plus, minus=minus, rho=rho, t_grid=dev.t_grid, s_grid=dev.s_grid)
    logger.debug(f"Extremal set with rho={rho:.4g}: {int(plus.sum())} (+), {int(minus.sum())} (-)")
    return ext
