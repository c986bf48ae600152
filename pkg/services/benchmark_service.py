from typing import Sequence
import logging
import math
import numpy as np
from core.errors import EmptyPrefixError, InvalidConfigError, ShapeMismatchError
from data.models import BenchmarkEstimate, BenchmarkKind, FunctionalSeries
from services.kernel_service import TRIWEIGHT, KernelSpec
from services.smoothing_service import bias_corrected_weight_matrix, check_bandwidth

logger = logging.getLogger(__name__)

# h_tilde = h ** AUX_EXPONENT oversmooths relative to the main bandwidth.
AUX_EXPONENT = 5.0 / 6.0


def auxiliary_bandwidth(h: float) -> float:
    return h ** AUX_EXPONENT


def benchmark_initial(series: FunctionalSeries, h: float, kernel: KernelSpec = TRIWEIGHT) -> BenchmarkEstimate:
    """Estimate of mu(0, .): corrected fit with h_tilde evaluated at t0 = h_tilde."""
    check_bandwidth(h)
    h_aux = auxiliary_bandwidth(h)
    weights = bias_corrected_weight_matrix(np.array([h_aux]), series.design, h_aux, kernel)
    values = (weights @ series.values)[0]
    logger.debug(f"Initial-mean benchmark with auxiliary bandwidth {h_aux:.4g}")
    return BenchmarkEstimate(
        values=values,
        kind=BenchmarkKind.INITIAL,
        parameter=h_aux,
        s_grid=series.s_grid,
    )


def prefix_length(n: int, x0: float) -> int:
    return int(math.floor(x0 * n + 1e-9))


def benchmark_prefix_mean(series: FunctionalSeries, x0: float) -> BenchmarkEstimate:
    """(1 / (n x0)) * sum of the first floor(x0 n) curves."""
    if not 0 < x0 < 1:
        raise InvalidConfigError(f"prefix benchmark needs x0 in (0, 1), got {x0}")
    k = prefix_length(series.n, x0)
    if k == 0:
        raise EmptyPrefixError(f"floor(x0 * n) = 0 for x0={x0}, n={series.n}")
    values = series.values[:k].sum(axis=0) / (series.n * x0)
    return BenchmarkEstimate(
        values=values,
        kind=BenchmarkKind.PREFIX_MEAN,
        parameter=x0,
        s_grid=series.s_grid,
    )


def benchmark_fixed(series: FunctionalSeries, values: Sequence[float]) -> BenchmarkEstimate:
    values = np.asarray(values, dtype=float)
    if values.shape != (series.N,):
        raise ShapeMismatchError(f"fixed benchmark has {values.size} points, series has {series.N}")
    return BenchmarkEstimate(values=values, kind=BenchmarkKind.FIXED, s_grid=series.s_grid)
