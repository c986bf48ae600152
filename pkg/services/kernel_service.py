"""Smoothing kernels and the quadratic spectral weight."""
from enum import Enum
from typing import Optional, Union
import logging
import numpy as np
from scipy.integrate import trapezoid

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

TRIWEIGHT_CONSTANT = 35.0 / 32.0
SQRT2 = np.sqrt(2.0)


class KernelKind(str, Enum):
    TRIWEIGHT = "triweight"
    TABLE = "table"


class KernelSpec:
    """Symmetric kernel supported on [-1, 1]; default is the triweight."""

    def __init__(self, kind: KernelKind = KernelKind.TRIWEIGHT,
                 x: Optional[np.ndarray] = None, y: Optional[np.ndarray] = None):
        self.kind = kind
        self._x = x
        self._y = y

    @classmethod
    def from_table(cls, x, y) -> "KernelSpec":
        """Tabulated kernel, symmetrised and normalised to unit integral."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if x.ndim != 1 or x.shape != y.shape or x.size < 3:
            raise ValueError("kernel table needs matching 1-d x and y with at least 3 points")
        if np.any(np.diff(x) <= 0):
            raise ValueError("kernel table x must be strictly increasing")
        if x[0] < -1 - 1e-12 or x[-1] > 1 + 1e-12:
            raise ValueError("kernel table must be supported on [-1, 1]")
        grid = np.union1d(np.abs(x), -np.abs(x))
        sym = 0.5 * (np.interp(grid, x, y, left=0.0, right=0.0)
                     + np.interp(-grid, x, y, left=0.0, right=0.0))
        area = trapezoid(sym, grid)
        if area <= 0 or np.interp(0.0, grid, sym) <= 0:
            raise ValueError("kernel table must be positive at 0 with positive area")
        return cls(KernelKind.TABLE, grid, sym / area)

    def __call__(self, x: ArrayLike) -> ArrayLike:
        if self.kind == KernelKind.TRIWEIGHT:
            return triweight(x)
        out = np.interp(x, self._x, self._y, left=0.0, right=0.0)
        return out if np.ndim(x) else float(out)

    def __repr__(self) -> str:
        return f"KernelSpec({self.kind.value})"


def triweight(x: ArrayLike) -> ArrayLike:
    x = np.asarray(x, dtype=float)
    u = np.clip(1.0 - x * x, 0.0, None)
    out = TRIWEIGHT_CONSTANT * u ** 3
    return out if out.ndim else float(out)


TRIWEIGHT = KernelSpec()


def kernel_eval(x: ArrayLike, kernel: KernelSpec = TRIWEIGHT) -> ArrayLike:
    return kernel(x)


def kernel_star_eval(x: ArrayLike, kernel: KernelSpec = TRIWEIGHT) -> ArrayLike:
    """Effective kernel of the jackknife estimator, 2*sqrt(2)*K(sqrt(2)x) - K(x)."""
    x = np.asarray(x, dtype=float)
    out = 2.0 * SQRT2 * np.asarray(kernel(SQRT2 * x)) - np.asarray(kernel(x))
    return out if out.ndim else float(out)


def qs_weight(x: ArrayLike) -> ArrayLike:
    """Quadratic spectral weight 25/(12 pi^2 x^2) (sin(z)/z - cos(z)), z = 6 pi x / 5."""
    z = 6.0 * np.pi * np.asarray(x, dtype=float) / 5.0
    z2 = z * z
    small = np.abs(z) < 1e-2
    safe = np.where(small, 1.0, z)
    direct = 3.0 / (safe * safe) * (np.sin(safe) / safe - np.cos(safe))
    series = 1.0 - z2 / 10.0 + z2 ** 2 / 280.0 - z2 ** 3 / 15120.0
    out = np.where(small, series, direct)
    return out if out.ndim else float(out)
