from typing import List, Optional, Sequence
import logging
import math
import numpy as np
from core.errors import InvalidConfigError
from data.models import (
    Analysis,
    BenchmarkKind,
    DeviationFit,
    DeviationSurface,
    FirstTimeResult,
    FunctionalSeries,
    TestConfig,
    TestResult,
)
from services.benchmark_service import benchmark_fixed, benchmark_initial, benchmark_prefix_mean
from services.bootstrap_service import (
    block_sums,
    bootstrap_quantile,
    draws_from_block_sums,
    make_blocks,
    select_block_lengths,
    variance_diagnostic,
)
from services.deviation_service import default_rho, deviation_surface, extremal_set
from services.kernel_service import TRIWEIGHT, KernelSpec
from services.smoothing_service import bias_corrected_surface, residuals
from services.tuning_service import cv_bandwidth

logger = logging.getLogger(__name__)


def fit_deviation(series: FunctionalSeries, config: TestConfig, kernel: KernelSpec = TRIWEIGHT) -> DeviationFit:
    """Bandwidth, corrected surface, benchmark and deviation surface."""
    cv = None
    h = config.bandwidth
    if h is None:
        cv = cv_bandwidth(series, config.cv_candidates, config.cv_folds, seed=config.seed, kernel=kernel)
        h = cv.chosen

    surface = bias_corrected_surface(series, h, (config.x0, config.x1), kernel)
    if config.benchmark == BenchmarkKind.INITIAL:
        bench = benchmark_initial(series, h, kernel)
    elif config.benchmark == BenchmarkKind.PREFIX_MEAN:
        bench = benchmark_prefix_mean(series, config.x0)
    else:
        bench = benchmark_fixed(series, config.benchmark_values)

    dev = deviation_surface(surface, bench)
    rho = default_rho(series.n, h) if config.rho is None else config.rho
    logger.info(f"d_inf={dev.sup:.5g} with h={h:.4g} on {dev.t_grid.size} x {series.N} grid")
    return DeviationFit(
        bandwidth=h,
        cv=cv,
        surface=surface,
        benchmark=bench,
        deviation=dev,
        rho=rho,
        labels=series.labels,
    )


def analyze(series: FunctionalSeries, config: TestConfig, kernel: KernelSpec = TRIWEIGHT) -> Analysis:
    """Everything in the test that does not depend on delta or alpha."""
    fit = fit_deviation(series, config, kernel)
    h = fit.bandwidth
    ext = extremal_set(fit.deviation, fit.rho)
    res = residuals(series, fit.surface)
    q, r = config.blocks if config.blocks is not None else select_block_lengths(res)
    plan = make_blocks(series.n, q, r)
    sums = block_sums(res, ext, plan, h, kernel)
    block_variance = variance_diagnostic(sums, series.n, h)
    draws = draws_from_block_sums(sums, plan, h, config.boot, config.seed, config.threads)
    logger.info(
        f"Bootstrap: {config.boot} draws over {ext.size} extremal points "
        f"(rho={fit.rho:.4g}, m={plan.m}, q={q}, r={r})"
    )
    return Analysis(
        fit=fit,
        extremal=ext,
        residuals=res,
        plan=plan,
        draws=draws,
        block_variance=block_variance,
        config=config,
    )


def delta_hat_alpha(d_inf_hat: float, quantile: float, n: int, h: float) -> float:
    """Smallest threshold at which the test no longer rejects."""
    if quantile < 0:
        raise InvalidConfigError(f"quantile must be nonnegative, got {quantile}")
    return max(0.0, d_inf_hat - quantile / math.sqrt(n * h))


def _label_for(t: float, n: int, labels: Optional[List[str]]) -> Optional[str]:
    if labels is None:
        return None
    j = min(n, max(1, int(round(t * n))))
    return labels[j - 1]


def first_time_per_s(
        dev: DeviationSurface,
        delta: float,
        delta_n: float,
        x0: float,
        h: float,
        labels: Optional[List[str]] = None
) -> FirstTimeResult:
    """First time the running maximum of |d(., s)| reaches delta - delta_n, per s."""
    if delta <= 0:
        raise InvalidConfigError(f"first time needs delta > 0, got {delta}")
    if delta_n < 0:
        raise InvalidConfigError(f"delta_n must be nonnegative, got {delta_n}")
    level = delta - delta_n
    running = np.maximum.accumulate(np.abs(dev.values), axis=0)
    below = (running < level).sum(axis=0)
    reached = running[-1] >= level
    t_hat = max(x0, h) + below / dev.n

    per_s = [float(t) if hit else None for t, hit in zip(t_hat, reached)]
    finite = [t for t in per_s if t is not None]
    global_ = min(finite) if finite else None
    return FirstTimeResult(
        per_s=per_s,
        global_=global_,
        delta=delta,
        delta_n=delta_n,
        per_s_label=None if labels is None else [
            None if t is None else _label_for(t, dev.n, labels) for t in per_s
        ],
        global_label=None if global_ is None else _label_for(global_, dev.n, labels),
    )


def first_time(fit: DeviationFit, delta: float, x0: float, delta_n: Optional[float] = None) -> FirstTimeResult:
    delta_n = fit.rho if delta_n is None else delta_n
    return first_time_per_s(fit.deviation, delta, delta_n, x0, fit.bandwidth, fit.labels)


def decide(analysis: Analysis, delta: float, alpha: float) -> TestResult:
    """Test decision, p-value and delta_hat_alpha for one threshold."""
    if delta < 0:
        raise InvalidConfigError(f"delta must be nonnegative, got {delta}")
    if not 0 < alpha < 1:
        raise InvalidConfigError(f"alpha must lie in (0, 1), got {alpha}")
    fit = analysis.fit
    config = analysis.config
    n = fit.surface.n
    h = fit.bandwidth
    d_inf = fit.deviation.sup
    draws = analysis.draws.values

    quantile = bootstrap_quantile(analysis.draws, 1.0 - alpha)
    T = math.sqrt(n * h) * (d_inf - delta)
    reject = T > quantile
    p_value = (1 + int(np.count_nonzero(draws >= T))) / (draws.size + 1)
    delta_n = fit.rho if config.delta_n is None else config.delta_n
    logger.info(f"delta={delta:.4g}: T={T:.4g}, quantile={quantile:.4g}, reject={reject}")

    return TestResult(
        d_inf=d_inf,
        T=T,
        quantile=quantile,
        reject=reject,
        p_value=p_value,
        delta=delta,
        alpha=alpha,
        delta_hat_alpha=delta_hat_alpha(d_inf, quantile, n, h),
        first_time=first_time(fit, delta, config.x0, delta_n) if delta > 0 else None,
        config={
            "h": h,
            "q": analysis.plan.q,
            "r": analysis.plan.r,
            "rho": fit.rho,
            "B": config.boot,
            "alpha": alpha,
            "delta": delta,
            "delta_n": delta_n,
            "window": [config.x0, config.x1],
            "benchmark": config.benchmark.value,
            "seed": config.seed,
        },
        diagnostics={
            "n": n,
            "extremal_points": analysis.extremal.size,
            "block_variance": analysis.block_variance,
            "extrapolated_rows": int(analysis.residuals.extrapolated.sum()),
            "cv": None if fit.cv is None else fit.cv.model_dump(mode="json"),
        },
    )


def run_test(series: FunctionalSeries, delta: float, alpha: float, config: TestConfig,
             kernel: KernelSpec = TRIWEIGHT) -> TestResult:
    """Test H0(delta): d_inf <= delta against d_inf > delta."""
    if delta < 0 or not 0 < alpha < 1:
        raise InvalidConfigError(f"need delta >= 0 and alpha in (0, 1), got delta={delta}, alpha={alpha}")
    return decide(analyze(series, config, kernel), delta, alpha)


def run_tests(series: FunctionalSeries, deltas: Sequence[float], alpha: float, config: TestConfig,
              kernel: KernelSpec = TRIWEIGHT) -> List[TestResult]:
    """One analysis, one decision per threshold."""
    analysis = analyze(series, config, kernel)
    return [decide(analysis, delta, alpha) for delta in deltas]
