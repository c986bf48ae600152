from typing import List, Optional, Sequence, Tuple
import logging
import math
import numpy as np
from scipy.integrate import trapezoid
from core.config import settings
from core.errors import DegenerateDesignError, InvalidConfigError, TooFewCurvesError
from data.models import CVReport, FunctionalSeries
from services.kernel_service import TRIWEIGHT, KernelSpec
from services.smoothing_service import GRID_TOL, bias_corrected_weight_matrix

logger = logging.getLogger(__name__)

MAX_CANDIDATE = 0.49


def default_candidates(n: int, size: Optional[int] = None) -> List[float]:
    """Log-spaced grid on [n^(-1/5) / 3, n^(-1/5)]."""
    size = size or settings.CV_GRID_SIZE
    upper = min(n ** -0.2, MAX_CANDIDATE)
    return np.geomspace(upper / 3.0, upper, size).tolist()


def make_folds(n: int, k: int) -> List[np.ndarray]:
    """k contiguous folds of equal length; the remainder goes to the last fold."""
    size = n // k
    bounds = [i * size for i in range(k)] + [n]
    return [np.arange(bounds[i], bounds[i + 1]) for i in range(k)]


def squared_norm(curves: np.ndarray, s_grid: np.ndarray) -> np.ndarray:
    """Trapezoidal L2 norm squared of each row."""
    return trapezoid(curves ** 2, s_grid, axis=-1)


def cv_fold_fit(
        series: FunctionalSeries,
        h: float,
        folds: Sequence[np.ndarray],
        i: int,
        kernel: KernelSpec = TRIWEIGHT,
        trim: Optional[float] = None
) -> Tuple[np.ndarray, np.ndarray]:
    """Rows of fold i inside [trim, 1-trim] (trim defaults to h) and their fits from the remaining folds."""
    trim = h if trim is None else trim
    design = series.design
    held = folds[i]
    held = held[(design[held] >= trim - GRID_TOL) & (design[held] <= 1.0 - trim + GRID_TOL)]
    rest = np.setdiff1d(np.arange(series.n), folds[i])
    if held.size == 0:
        return held, np.empty((0, series.N))
    weights = bias_corrected_weight_matrix(design[held], design[rest], h, kernel)
    return held, weights @ series.values[rest]


def cv_score(series: FunctionalSeries, h: float, folds: Sequence[np.ndarray],
             kernel: KernelSpec = TRIWEIGHT, trim: Optional[float] = None) -> float:
    total = 0.0
    for i in range(len(folds)):
        held, fitted = cv_fold_fit(series, h, folds, i, kernel, trim)
        if held.size:
            total += float(squared_norm(series.values[held] - fitted, series.s_grid).sum())
    return total / (1.0 - h / 2.0)


def cv_bandwidth(
        series: FunctionalSeries,
        candidates: Optional[Sequence[float]] = None,
        k: Optional[int] = None,
        seed: Optional[int] = None,
        kernel: KernelSpec = TRIWEIGHT
) -> CVReport:
    """k-fold cross-validated bandwidth for the corrected estimator."""
    k = k or settings.CV_FOLDS
    if k < 2:
        raise InvalidConfigError(f"cross-validation needs k >= 2, got {k}")
    if series.n < 2 * k:
        raise TooFewCurvesError(f"cross-validation with k={k} needs n >= {2 * k}, got {series.n}")
    grid = sorted(default_candidates(series.n) if candidates is None else candidates)
    if len(set(grid)) != len(grid):
        raise InvalidConfigError(f"candidates must be distinct, got {grid}")
    if not grid or any(not 0 < h < 0.5 for h in grid):
        raise InvalidConfigError(f"candidates must be a nonempty list in (0, 1/2), got {grid}")

    folds = make_folds(series.n, k)
    # every candidate is scored on the rows inside the largest candidate's window
    trim = grid[-1]
    scores = []
    for h in grid:
        try:
            score = cv_score(series, h, folds, kernel, trim)
        except DegenerateDesignError as e:
            logger.warning(f"Bandwidth candidate {h:.4g} scored +inf: {str(e)}")
            score = math.inf
        logger.debug(f"CV score for h={h:.4g}: {score:.6g}")
        scores.append(score)

    finite = [s for s in scores if math.isfinite(s)]
    if finite:
        best = min(finite)
        tol = 1e-9 * abs(best) + 1e-12
        chosen = max(h for h, s in zip(grid, scores) if s <= best + tol)
    else:
        logger.warning("Every bandwidth candidate is degenerate; keeping the largest")
        chosen = grid[-1]
    logger.info(f"Cross-validated bandwidth h={chosen:.4g} from {len(grid)} candidates")
    return CVReport(candidates=grid, mse=scores, chosen=chosen, k=k, seed=seed)
