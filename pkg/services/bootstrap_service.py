"""Multiplier block bootstrap of the sup-statistic over the extremal set."""
from concurrent.futures import ThreadPoolExecutor
from typing import Optional, Tuple, Union
import logging
import math
import numpy as np
from core.config import settings
from core.errors import (
    EmptyExtremalSetError,
    InvalidBlocksError,
    SeriesTooShortError,
    ShapeMismatchError,
)
from core.rng import replicate_multipliers
from data.models import BlockPlan, BootstrapDraws, ExtremalSet, ResidualMatrix
from services.kernel_service import TRIWEIGHT, KernelSpec, kernel_star_eval, qs_weight

logger = logging.getLogger(__name__)

MIN_SERIES_LENGTH = 16
MAX_ABS_RHO = 0.97
# Upper bound on the (points x m x q) work array built per chunk of extremal points.
BLOCK_SUM_BUDGET = 2_000_000


def make_blocks(n: int, q: int, r: int) -> BlockPlan:
    """Large blocks of length q separated by small blocks of length r."""
    if not q > r >= 1:
        raise InvalidBlocksError(f"block lengths need q > r >= 1, got q={q}, r={r}")
    if not 2 * (q + r) < n:
        raise InvalidBlocksError(f"block lengths need 2(q + r) < n, got q={q}, r={r}, n={n}")
    return BlockPlan(n=n, q=q, r=r, m=n // (q + r))


def block_sums(
        res: ResidualMatrix,
        ext: ExtremalSet,
        plan: BlockPlan,
        h: float,
        kernel: KernelSpec = TRIWEIGHT
) -> np.ndarray:
    """m x |ext| matrix A_l(t, s) = sum over I_l of eps_j(s) K*((j/n - t) / h)."""
    if ext.size == 0:
        raise EmptyExtremalSetError("extremal set is empty")
    if res.n != plan.n:
        raise ShapeMismatchError(f"residuals have n={res.n}, block plan n={plan.n}")
    ti, si = np.nonzero(ext.mask)
    t_points = ext.t_grid[ti]
    rows = plan.row_index
    x = (rows + 1) / plan.n
    chunk = max(1, BLOCK_SUM_BUDGET // (plan.m * plan.q))
    blocked = res.values[rows]
    out = np.empty((plan.m, ti.size), dtype=float)
    for start in range(0, ti.size, chunk):
        stop = min(start + chunk, ti.size)
        k_star = np.asarray(kernel_star_eval((x[None, :, :] - t_points[start:stop, None, None]) / h, kernel))
        eps = np.moveaxis(blocked[:, :, si[start:stop]], 2, 0)
        out[:, start:stop] = (k_star * eps).sum(axis=2).T
    return out


def _normalisation(plan: BlockPlan, h: float) -> float:
    return 1.0 / math.sqrt(plan.m * plan.q * h)


def bootstrap_draw(
        res: ResidualMatrix,
        ext: ExtremalSet,
        plan: BlockPlan,
        h: float,
        multipliers: np.ndarray,
        kernel: KernelSpec = TRIWEIGHT
) -> float:
    """One bootstrap statistic for the given block multipliers."""
    multipliers = np.asarray(multipliers, dtype=float)
    if multipliers.shape != (plan.m,):
        raise ShapeMismatchError(f"need {plan.m} multipliers, got {multipliers.shape}")
    sums = block_sums(res, ext, plan, h, kernel)
    return float(np.abs(multipliers @ sums).max() * _normalisation(plan, h))


def draws_from_block_sums(
        sums: np.ndarray,
        plan: BlockPlan,
        h: float,
        B: int,
        seed: int,
        threads: int = 1,
        chunk: Optional[int] = None
) -> BootstrapDraws:
    """B replicates; chunking is fixed so results do not depend on the thread count."""
    chunk = chunk or settings.DRAW_CHUNK
    norm = _normalisation(plan, h)

    def run(replicates: range) -> np.ndarray:
        nu = replicate_multipliers(seed, replicates, plan.m)
        return np.abs(nu @ sums).max(axis=1) * norm

    work = [range(a, min(a + chunk, B)) for a in range(0, B, chunk)]
    if threads > 1 and len(work) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run, work))
    else:
        parts = [run(w) for w in work]
    return BootstrapDraws(values=np.concatenate(parts), B=B, seed=seed)


def bootstrap_draws(
        res: ResidualMatrix,
        ext: ExtremalSet,
        plan: BlockPlan,
        h: float,
        B: int,
        seed: int,
        threads: int = 1,
        kernel: KernelSpec = TRIWEIGHT
) -> BootstrapDraws:
    sums = block_sums(res, ext, plan, h, kernel)
    return draws_from_block_sums(sums, plan, h, B, seed, threads)


def bootstrap_quantile(draws: Union[BootstrapDraws, np.ndarray], level: float) -> float:
    """Order statistic of rank ceil(level * B)."""
    values = draws.values if isinstance(draws, BootstrapDraws) else np.asarray(draws, dtype=float)
    B = values.size
    if B < 1:
        raise ValueError("need at least one bootstrap draw")
    rank = min(B, max(1, math.ceil(level * B - 1e-9)))
    return float(np.sort(values)[rank - 1])


def variance_diagnostic(sums: np.ndarray, n: int, h: float) -> float:
    """max over the extremal set of (nh)^-1 sum_l A_l^2; warns below 1/log(n)."""
    value = float((sums ** 2).sum(axis=0).max() / (n * h))
    if value < 1.0 / math.log(n):
        logger.warning(
            f"Block variance diagnostic {value:.4g} is below 1/log(n) = {1.0 / math.log(n):.4g}; "
            f"bootstrap quantiles may degenerate"
        )
    return value


def tapered_autocorrelation(z: np.ndarray, q0: int) -> float:
    """Lag-one autocorrelation from QS-tapered autocovariances up to lag q0."""
    z = np.asarray(z, dtype=float) - np.mean(z)
    n = z.size
    gamma = np.array([z[:n - k] @ z[k:] / n for k in range(q0 + 1)])
    w = np.asarray(qs_weight(np.arange(1, q0 + 1) / q0))
    den = float(w @ gamma[:-1])
    if den <= 0:
        return 0.0
    return float(w @ gamma[1:]) / den


def block_length_from_rho(n: int, rho: float) -> int:
    q0 = math.floor(n ** 0.2 + 1e-12)
    a = min(abs(rho), MAX_ABS_RHO)
    factor = (2.0 * a / (1.0 - a * a)) ** 0.4
    return max(q0, math.ceil(factor * n ** 0.2 - 1e-12))


def select_block_lengths(res: ResidualMatrix) -> Tuple[int, int]:
    """Large and small block lengths (q, r) from the residual series."""
    n = res.n
    if n < MIN_SERIES_LENGTH:
        raise SeriesTooShortError(f"block length selection needs n >= {MIN_SERIES_LENGTH}, got {n}")
    r = math.ceil(n ** 0.1 - 1e-12)
    q0 = math.floor(n ** 0.2 + 1e-12)
    rho = tapered_autocorrelation(res.values.mean(axis=1), q0)
    q = max(block_length_from_rho(n, rho), r + 1)
    q_max = (n - 1) // 2 - r
    if q > q_max:
        logger.warning(f"Large block length {q} clamped to {q_max} for n={n}")
        q = q_max
    logger.info(f"Block lengths q={q}, r={r} (lag-one autocorrelation {rho:.3f})")
    return q, r
