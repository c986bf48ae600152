"""Synthetic functional time series and the Monte-Carlo rejection study."""
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Sequence, Union
import logging
import numpy as np
from scipy.integrate import trapezoid
from core.rng import child_rng, child_seed
from data.models import (
    BenchmarkKind,
    DeviationSurface,
    DgpSpec,
    ErrorProcess,
    FunctionalSeries,
    MeanFunction,
    StudyRow,
    TestConfig,
)
from services.deviation_service import deviation_from_values
from services.inference_service import analyze, decide
from services.smoothing_service import GRID_TOL, evaluation_times

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

# 4 * integral of t(1 - t) over [0, 1/4]
MU2_PREFIX_OFFSET = 5.0 / 48.0


def _scalar_or_array(out: np.ndarray) -> ArrayLike:
    return out if out.ndim else float(out)


def mu1(t: ArrayLike, s: ArrayLike) -> ArrayLike:
    t, s = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(s, dtype=float))
    base = s * (1.0 - s)
    wave = base + 2.0 * np.sin(np.pi * (t - 0.25))
    out = np.where(t <= 1 / 8, base, np.where(t <= 5 / 8, wave, wave - 2.0 * base * (t - 0.75)))
    return _scalar_or_array(out)


def f_weight(s: ArrayLike) -> ArrayLike:
    """[1 + ((1 - s) / s)^2]^-1, written so that f(0) = 0."""
    s = np.asarray(s, dtype=float)
    return _scalar_or_array(s * s / (s * s + (1.0 - s) ** 2))


def mu2(t: ArrayLike, s: ArrayLike) -> ArrayLike:
    t, s = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(s, dtype=float))
    out = 4.0 + np.asarray(f_weight(s)) + t * (1.0 - t)
    out = out + np.where(t >= 0.25, s * s * (t - 0.25) ** 2, 0.0)
    return _scalar_or_array(out)


def mean_function(spec: DgpSpec):
    if spec.mean == MeanFunction.MU1:
        return mu1
    if spec.mean == MeanFunction.MU2:
        return mu2
    return spec.custom_mean


def oracle_benchmark(spec: DgpSpec, s_grid: np.ndarray) -> np.ndarray:
    """The benchmark g of the true mean."""
    if spec.mean == MeanFunction.MU1:
        return np.asarray(mu1(0.0, s_grid))
    if spec.mean == MeanFunction.MU2:
        return 4.0 + np.asarray(f_weight(s_grid)) + MU2_PREFIX_OFFSET
    mean = spec.custom_mean
    if spec.benchmark == BenchmarkKind.PREFIX_MEAN:
        x0 = spec.window[0]
        t = np.linspace(0.0, x0, 2001)
        return trapezoid(mean(t[:, None], s_grid[None, :]), t, axis=0) / x0
    return np.asarray(mean(np.zeros_like(s_grid), s_grid))


def oracle_deviation(spec: DgpSpec, n: int, h: Optional[float] = None) -> DeviationSurface:
    """Exact deviation mu(j/n, s) - g(s) on the design points of the window (trimmed when h is given)."""
    s_grid = np.linspace(0.0, 1.0, spec.N)
    x0, x1 = spec.window
    if h is None:
        design = np.arange(1, n + 1) / n
        t_grid = design[(design >= x0 - GRID_TOL) & (design <= x1 + GRID_TOL)]
    else:
        t_grid = evaluation_times(n, x0, x1, h)
    mean = mean_function(spec)
    values = np.asarray(mean(t_grid[:, None], s_grid[None, :])) - oracle_benchmark(spec, s_grid)[None, :]
    return deviation_from_values(values, t_grid, s_grid, (x0, x1), h or 0.0, n)


def brownian_bridges(rng: np.random.Generator, count: int, s_grid: np.ndarray) -> np.ndarray:
    """count independent Brownian bridges on s_grid, built from Gaussian increments."""
    s_grid = np.asarray(s_grid, dtype=float)
    points = s_grid if s_grid[-1] == 1.0 else np.append(s_grid, 1.0)
    steps = np.diff(np.concatenate(([0.0], points)))
    walk = np.cumsum(np.sqrt(steps)[None, :] * rng.standard_normal((count, points.size)), axis=1)
    bridge = walk - points[None, :] * walk[:, -1:]
    return bridge[:, :s_grid.size]


def simulate_series(spec: DgpSpec, rng: Optional[np.random.Generator] = None) -> FunctionalSeries:
    """X_j(s_i) = mu(j/n, s_i) + eps_j(s_i) on a uniform grid."""
    rng = rng or child_rng(spec.seed)
    s_grid = np.linspace(0.0, 1.0, spec.N)
    t = np.arange(1, spec.n + 1) / spec.n
    mean = np.asarray(mean_function(spec)(t[:, None], s_grid[None, :]))
    if spec.errors == ErrorProcess.IID:
        errors = 0.5 * brownian_bridges(rng, spec.n, s_grid)
    else:
        bridges = brownian_bridges(rng, spec.n + 1, s_grid)
        errors = (bridges[1:] + 0.5 * bridges[:-1]) / np.sqrt(5.0)
    return FunctionalSeries(values=mean + errors, s_grid=s_grid)


def _rep_rejections(spec: DgpSpec, deltas: Sequence[float], alpha: float, B: int,
                    seed: int, rep: int, bandwidth: Optional[float]) -> List[bool]:
    series = simulate_series(spec, child_rng(seed, rep, 0))
    x0, x1 = spec.window
    config = TestConfig(
        x0=x0,
        x1=x1,
        benchmark=spec.benchmark,
        bandwidth=bandwidth,
        boot=B,
        seed=child_seed(seed, rep, 1),
        threads=1,
    )
    analysis = analyze(series, config)
    return [decide(analysis, delta, alpha).reject for delta in deltas]


def rejection_study(
        spec: DgpSpec,
        deltas: Sequence[float],
        alpha: float,
        reps: int,
        B: int,
        seed: int,
        bandwidth: Optional[float] = None,
        threads: int = 1
) -> List[StudyRow]:
    """Empirical rejection rate of the test for each threshold."""
    if reps < 1:
        raise ValueError(f"need at least one repetition, got {reps}")
    logger.info(f"Study {spec.mean.value}/{spec.errors.value}, n={spec.n}: {reps} reps x {len(deltas)} thresholds")

    def run(rep: int) -> List[bool]:
        return _rep_rejections(spec, deltas, alpha, B, seed, rep, bandwidth)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = np.array(list(pool.map(run, range(reps))))
    else:
        outcomes = np.array([run(rep) for rep in range(reps)])

    rates = outcomes.mean(axis=0)
    return [
        StudyRow(
            mean=spec.mean,
            errors=spec.errors,
            n=spec.n,
            delta=float(delta),
            alpha=alpha,
            reps=reps,
            bootstrap_B=B,
            rejection_rate=float(rate),
        )
        for delta, rate in zip(deltas, rates)
    ]
