from enum import Enum
from typing import Any, Callable, ClassVar, Dict, List, Optional, Tuple
import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_serializer, field_validator, model_validator
from core.config import settings


def _float_array(v: Any) -> np.ndarray:
    return np.asarray(v, dtype=float)


class ArrayModel(BaseModel):
    """Base for models that carry numpy arrays."""
    model_config = ConfigDict(arbitrary_types_allowed=True)


# Enumerations
class BenchmarkKind(str, Enum):
    INITIAL = "initial"
    PREFIX_MEAN = "prefix-mean"
    FIXED = "fixed"


class MeanFunction(str, Enum):
    MU1 = "mu1"
    MU2 = "mu2"
    CUSTOM = "custom"


class ErrorProcess(str, Enum):
    IID = "iid"
    MA = "ma"


# Data
class FunctionalSeries(ArrayModel):
    values: np.ndarray
    s_grid: np.ndarray
    labels: Optional[List[str]] = None

    @field_validator('values', 's_grid', mode='before')
    def as_float(cls, v):
        return _float_array(v)

    @field_validator('values')
    def check_values(cls, v):
        if v.ndim != 2:
            raise ValueError("values must be an n x N matrix")
        if v.shape[0] < 2 or v.shape[1] < 2:
            raise ValueError(f"need n >= 2 curves and N >= 2 points, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("values contain missing or non-finite entries")
        return v

    @field_validator('s_grid')
    def check_grid(cls, v):
        if v.ndim != 1:
            raise ValueError("s_grid must be one-dimensional")
        if np.any(np.diff(v) <= 0):
            raise ValueError("s_grid must be strictly increasing")
        if v[0] < 0 or v[-1] > 1:
            raise ValueError("s_grid must lie in [0, 1]")
        return v

    @model_validator(mode='after')
    def check_shapes(self):
        if self.values.shape[1] != self.s_grid.shape[0]:
            raise ValueError(
                f"values have {self.values.shape[1]} columns but s_grid has {self.s_grid.shape[0]} points"
            )
        if self.labels is not None and len(self.labels) != self.values.shape[0]:
            raise ValueError("labels must have one entry per curve")
        return self

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def N(self) -> int:
        return self.values.shape[1]

    @property
    def design(self) -> np.ndarray:
        """Rescaled times j/n, j = 1..n."""
        return np.arange(1, self.n + 1) / self.n


class MeanSurface(ArrayModel):
    values: np.ndarray
    t_grid: np.ndarray
    s_grid: np.ndarray
    bandwidth: float = Field(..., gt=0, lt=0.5)
    window: Tuple[float, float]
    n: int

    @model_validator(mode='after')
    def check_surface(self):
        if self.values.shape != (self.t_grid.size, self.s_grid.size):
            raise ValueError("surface shape does not match its grids")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("surface has non-finite entries")
        return self


class ResidualMatrix(ArrayModel):
    values: np.ndarray
    extrapolated: np.ndarray
    s_grid: np.ndarray

    @property
    def n(self) -> int:
        return self.values.shape[0]


class BenchmarkEstimate(ArrayModel):
    values: np.ndarray
    kind: BenchmarkKind
    parameter: Optional[float] = None
    s_grid: np.ndarray

    @field_validator('values')
    def finite(cls, v):
        if not np.all(np.isfinite(v)):
            raise ValueError("benchmark has non-finite entries")
        return v


class DeviationSurface(ArrayModel):
    values: np.ndarray
    t_grid: np.ndarray
    s_grid: np.ndarray
    sup: float = Field(..., ge=0)
    argmax: List[Tuple[int, int]]
    window: Tuple[float, float]
    bandwidth: float
    n: int


class ExtremalSet(ArrayModel):
    plus: np.ndarray
    minus: np.ndarray
    rho: float = Field(..., ge=0)
    t_grid: np.ndarray
    s_grid: np.ndarray

    @property
    def mask(self) -> np.ndarray:
        return self.plus | self.minus

    @property
    def points(self) -> List[Tuple[int, int]]:
        ti, si = np.nonzero(self.mask)
        return list(zip(ti.tolist(), si.tolist()))

    @property
    def signs(self) -> List[int]:
        ti, si = np.nonzero(self.mask)
        p = self.plus[ti, si]
        m = self.minus[ti, si]
        return np.where(p & m, 0, np.where(p, 1, -1)).tolist()

    @property
    def size(self) -> int:
        return int(self.mask.sum())


class BlockPlan(BaseModel):
    n: int
    q: int
    r: int
    m: int

    @property
    def blocks(self) -> List[range]:
        """Large blocks I_l as 1-based time indices."""
        step = self.q + self.r
        return [range(l * step + 1, l * step + self.q + 1) for l in range(self.m)]

    @property
    def row_index(self) -> np.ndarray:
        """m x q array of 0-based row positions of the large blocks."""
        step = self.q + self.r
        return np.arange(self.m)[:, None] * step + np.arange(self.q)[None, :]


class BootstrapDraws(ArrayModel):
    values: np.ndarray
    B: int
    seed: int

    @field_validator('values')
    def nonnegative(cls, v):
        if np.any(v < 0):
            raise ValueError("bootstrap draws must be nonnegative")
        return v


class DeviationFit(ArrayModel):
    """Smoothing stage of the pipeline: everything that does not depend on the bootstrap."""
    bandwidth: float
    cv: Optional["CVReport"] = None
    surface: MeanSurface
    benchmark: BenchmarkEstimate
    deviation: DeviationSurface
    rho: float
    labels: Optional[List[str]] = None


class Analysis(ArrayModel):
    """Delta-free part of a test: one analysis serves every threshold."""
    fit: DeviationFit
    extremal: ExtremalSet
    residuals: ResidualMatrix
    plan: BlockPlan
    draws: BootstrapDraws
    block_variance: float
    config: "TestConfig"


# Configuration
class MissingPolicy(BaseModel):
    max_missing_fraction: float = Field(default_factory=lambda: settings.MISSING_MAX_FRACTION, ge=0, lt=1)


class TestConfig(BaseModel):
    __test__: ClassVar[bool] = False

    x0: float = Field(default=0.0, ge=0, lt=1)
    x1: float = Field(default=1.0, gt=0, le=1)
    benchmark: BenchmarkKind = BenchmarkKind.INITIAL
    benchmark_values: Optional[List[float]] = None
    bandwidth: Optional[float] = Field(default=None, gt=0, lt=0.5)
    cv_candidates: Optional[List[float]] = None
    cv_folds: int = Field(default_factory=lambda: settings.CV_FOLDS, ge=2)
    blocks: Optional[Tuple[int, int]] = None
    rho: Optional[float] = Field(default=None, ge=0)
    delta_n: Optional[float] = Field(default=None, ge=0)
    boot: int = Field(default_factory=lambda: settings.BOOTSTRAP_REPS, ge=1)
    seed: int = 0
    threads: int = Field(default_factory=lambda: settings.THREADS, ge=1)

    @model_validator(mode='after')
    def check_config(self):
        if self.x0 >= self.x1:
            raise ValueError(f"window requires x0 < x1, got [{self.x0}, {self.x1}]")
        if self.benchmark == BenchmarkKind.PREFIX_MEAN and self.x0 <= 0:
            raise ValueError("prefix-mean benchmark needs x0 > 0")
        if self.benchmark == BenchmarkKind.FIXED and not self.benchmark_values:
            raise ValueError("fixed benchmark needs benchmark_values")
        return self


class DgpSpec(ArrayModel):
    mean: MeanFunction = MeanFunction.MU1
    errors: ErrorProcess = ErrorProcess.IID
    n: int = Field(..., ge=16)
    N: int = Field(default_factory=lambda: settings.SIMULATION_POINTS, ge=2)
    seed: int = 0
    custom_mean: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    custom_benchmark: BenchmarkKind = BenchmarkKind.INITIAL
    custom_window: Tuple[float, float] = (0.0, 1.0)

    @model_validator(mode='after')
    def check_custom(self):
        if self.mean == MeanFunction.CUSTOM and self.custom_mean is None:
            raise ValueError("custom mean needs custom_mean")
        return self

    @property
    def benchmark(self) -> BenchmarkKind:
        if self.mean == MeanFunction.MU1:
            return BenchmarkKind.INITIAL
        if self.mean == MeanFunction.MU2:
            return BenchmarkKind.PREFIX_MEAN
        return self.custom_benchmark

    @property
    def window(self) -> Tuple[float, float]:
        if self.mean == MeanFunction.MU1:
            return (0.0, 1.0)
        if self.mean == MeanFunction.MU2:
            return (0.25, 1.0)
        return self.custom_window


# Results
class FirstTimeResult(BaseModel):
    per_s: List[Optional[float]]
    global_: Optional[float] = Field(default=None, alias="global")
    delta: float
    delta_n: float
    per_s_label: Optional[List[Optional[str]]] = None
    global_label: Optional[str] = None

    model_config = ConfigDict(populate_by_name=True)

    @model_validator(mode='after')
    def global_is_min(self):
        finite = [t for t in self.per_s if t is not None]
        expected = min(finite) if finite else None
        if expected != self.global_:
            raise ValueError("global first time must be the minimum over s")
        return self


class TestResult(BaseModel):
    __test__: ClassVar[bool] = False

    d_inf: float = Field(..., ge=0)
    T: float
    quantile: float = Field(..., ge=0)
    reject: bool
    p_value: float = Field(..., gt=0, le=1)
    delta: float
    alpha: float
    delta_hat_alpha: float = Field(..., ge=0)
    first_time: Optional[FirstTimeResult] = None
    config: Dict[str, Any]
    diagnostics: Dict[str, Any] = {}

    @model_validator(mode='after')
    def decision_rule(self):
        if self.reject != (self.T > self.quantile):
            raise ValueError("reject must equal T > quantile")
        return self

    def to_json_dict(self) -> dict:
        return self.model_dump(mode="json", by_alias=True)


class CVReport(BaseModel):
    candidates: List[float]
    mse: List[float]
    chosen: float
    k: int
    seed: Optional[int] = None

    @field_serializer('mse', when_used='json')
    def finite_scores(self, mse: List[float]) -> List[Optional[float]]:
        # degenerate candidates score +inf, written as null
        return [s if np.isfinite(s) else None for s in mse]

    @model_validator(mode='after')
    def check_report(self):
        if len(self.candidates) != len(self.mse):
            raise ValueError("one score per candidate")
        if any(not 0 < h < 0.5 for h in self.candidates):
            raise ValueError("candidates must lie in (0, 1/2)")
        if any(a >= b for a, b in zip(self.candidates, self.candidates[1:])):
            raise ValueError("candidates must be sorted ascending")
        return self


class StudyRow(BaseModel):
    mean: MeanFunction
    errors: ErrorProcess
    n: int
    delta: float
    alpha: float
    reps: int
    bootstrap_B: int
    rejection_rate: float = Field(..., ge=0, le=1)


# Request bodies
class SeriesPayload(BaseModel):
    values: List[List[float]]
    s_grid: List[float]
    labels: Optional[List[str]] = None

    def to_series(self) -> FunctionalSeries:
        return FunctionalSeries(values=self.values, s_grid=self.s_grid, labels=self.labels)


class TestRequest(BaseModel):
    __test__: ClassVar[bool] = False

    series: SeriesPayload
    delta: float = Field(..., ge=0)
    alpha: float = Field(default_factory=lambda: settings.ALPHA, gt=0, lt=1)
    config: TestConfig = Field(default_factory=TestConfig)


class FirstTimeRequest(TestRequest):
    delta: float = Field(..., gt=0)


class BandwidthRequest(BaseModel):
    series: SeriesPayload
    candidates: Optional[List[float]] = None
    k: int = Field(default_factory=lambda: settings.CV_FOLDS, ge=2)


class SurfaceRequest(BaseModel):
    series: SeriesPayload
    config: TestConfig = Field(default_factory=TestConfig)


class StudyRequest(BaseModel):
    mean: MeanFunction = MeanFunction.MU1
    errors: ErrorProcess = ErrorProcess.IID
    n: int = Field(..., ge=16)
    points: int = Field(default_factory=lambda: settings.SIMULATION_POINTS, ge=2)
    deltas: List[float]
    alpha: float = Field(default_factory=lambda: settings.ALPHA, gt=0, lt=1)
    reps: int = Field(default=10, ge=1)
    boot: int = Field(default=200, ge=1)
    bandwidth: Optional[float] = Field(default=None, gt=0, lt=0.5)
    seed: int = 0


DeviationFit.model_rebuild()
Analysis.model_rebuild()
