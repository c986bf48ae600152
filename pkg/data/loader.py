"""CSV ingestion with the missing-data policy, and the output writers."""
from pathlib import Path
from typing import Iterable, List, Optional, Tuple, Union
import json
import logging
import numpy as np
import pandas as pd
from pydantic import BaseModel, ValidationError
from scipy.interpolate import CubicSpline
from core.errors import NonMonotoneGridError, ParseError, ShapeMismatchError, TooFewRowsError
from data.models import DeviationFit, FirstTimeResult, FunctionalSeries, MissingPolicy, StudyRow

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

LONG_COLUMNS = ["label", "s", "value"]
STUDY_COLUMNS = ["mean", "errors", "n", "delta", "alpha", "reps", "bootstrap_B", "rejection_rate"]
SURFACE_COLUMNS = ["t", "s", "mu_tilde", "g_hat", "deviation"]


def _parse_cells(cells: pd.DataFrame, first_row: int) -> np.ndarray:
    """Strings to floats; empty cells become NaN, anything else unparsable is an error."""
    stripped = cells.apply(lambda col: col.str.strip())
    parsed = stripped.apply(pd.to_numeric, errors="coerce").to_numpy(dtype=float)
    bad = (stripped.to_numpy() != "") & ~np.isfinite(parsed)
    if bad.any():
        i, k = map(int, np.argwhere(bad)[0])
        column = str(cells.columns[k])
        raise ParseError(
            f"malformed cell {stripped.iat[i, k]!r} at row {first_row + i}, column {column}",
            row=first_row + i,
            column=column,
        )
    return parsed


def _read_raw(path: PathLike, header: Optional[int]) -> pd.DataFrame:
    try:
        return pd.read_csv(path, header=header, dtype=str, keep_default_na=False, encoding="utf-8")
    except pd.errors.EmptyDataError:
        raise ParseError(f"{path} is empty", row=0)


def _parse_grid(header: List[str]) -> np.ndarray:
    try:
        grid = np.array([float(x) for x in header], dtype=float)
    except ValueError:
        raise ParseError(f"grid header must be numeric, got {header}", row=0)
    if grid.size < 2:
        raise NonMonotoneGridError(f"need at least two grid columns, got {grid.size}")
    if not np.all(np.isfinite(grid)) or np.any(np.diff(grid) <= 0):
        raise NonMonotoneGridError(f"grid header must be strictly increasing, got {header}")
    return grid


def read_wide(path: PathLike) -> Tuple[List[str], np.ndarray, np.ndarray]:
    """Labels, raw grid and the (possibly incomplete) value matrix of a wide CSV."""
    raw = _read_raw(path, header=None)
    if raw.shape[1] < 2:
        raise ParseError("need a label column and at least one grid column", row=0)
    grid = _parse_grid([x.strip() for x in raw.iloc[0, 1:]])
    body = raw.iloc[1:, 1:].copy()
    body.columns = list(raw.iloc[0, 1:])
    values = _parse_cells(body, first_row=1)
    labels = [x.strip() for x in raw.iloc[1:, 0]]
    return labels, grid, values


def read_long(path: PathLike) -> Tuple[List[str], np.ndarray, np.ndarray]:
    """The same triple from a `label,s,value` CSV; absent pairs are missing."""
    raw = _read_raw(path, header=0)
    if list(raw.columns) != LONG_COLUMNS:
        raise ParseError(f"long format needs header {','.join(LONG_COLUMNS)}, got {list(raw.columns)}", row=0)
    parsed = _parse_cells(raw[["s", "value"]], first_row=1)
    if np.isnan(parsed[:, 0]).any():
        i = int(np.flatnonzero(np.isnan(parsed[:, 0]))[0])
        raise ParseError(f"missing grid point at row {i + 1}", row=i + 1, column="s")
    frame = pd.DataFrame({"label": raw["label"].str.strip(), "s": parsed[:, 0], "value": parsed[:, 1]})
    if frame.duplicated(["label", "s"]).any():
        i = int(np.flatnonzero(frame.duplicated(["label", "s"]).to_numpy())[0])
        raise ParseError(f"duplicate (label, s) pair at row {i + 1}", row=i + 1)
    wide = frame.pivot(index="label", columns="s", values="value")
    labels = list(pd.unique(frame["label"]))
    wide = wide.reindex(index=labels).sort_index(axis=1)
    return labels, _parse_grid([repr(float(s)) for s in wide.columns]), wide.to_numpy(dtype=float)


def fill_row(grid: np.ndarray, row: np.ndarray) -> np.ndarray:
    """Natural cubic spline through the observed cells, extended linearly past the ends."""
    observed = np.isfinite(row)
    if observed.all():
        return row
    x, y = grid[observed], row[observed]
    out = row.copy()
    gaps = ~observed
    if x.size == 1:
        out[gaps] = y[0]
        return out
    spline = CubicSpline(x, y, bc_type="natural")
    at = grid[gaps]
    filled = spline(at)
    left, right = at < x[0], at > x[-1]
    filled[left] = y[0] + spline(x[0], 1) * (at[left] - x[0])
    filled[right] = y[-1] + spline(x[-1], 1) * (at[right] - x[-1])
    out[gaps] = filled
    return out


def clean_table(
        labels: List[str],
        grid: np.ndarray,
        values: np.ndarray,
        missing_policy: Optional[MissingPolicy] = None
) -> Tuple[FunctionalSeries, int]:
    """Drop rows that miss too much, fill the rest and rescale the grid to [0, 1]."""
    policy = missing_policy or MissingPolicy()
    missing = np.isnan(values).sum(axis=1)
    keep = missing <= policy.max_missing_fraction * grid.size + 1e-9
    dropped = int((~keep).sum())
    if dropped:
        logger.warning(
            f"Dropped {dropped} of {len(labels)} rows with more than "
            f"{policy.max_missing_fraction:.0%} missing cells"
        )
    if keep.sum() < 2:
        raise TooFewRowsError(f"need at least 2 usable rows, {int(keep.sum())} left after dropping {dropped}")

    kept = values[keep]
    filled = np.vstack([fill_row(grid, row) for row in kept])
    n_filled = int(np.isnan(kept).sum())
    if n_filled:
        logger.info(f"Filled {n_filled} missing cells by spline interpolation")
    s_grid = (grid - grid[0]) / (grid[-1] - grid[0])
    series = FunctionalSeries(
        values=filled,
        s_grid=s_grid,
        labels=[label for label, k in zip(labels, keep) if k],
    )
    return series, dropped


def load_csv(path: PathLike, missing_policy: Optional[MissingPolicy] = None, long: bool = False) -> FunctionalSeries:
    labels, grid, values = read_long(path) if long else read_wide(path)
    series, _ = clean_table(labels, grid, values, missing_policy)
    logger.info(f"Loaded {series.n} curves on {series.N} grid points from {path}")
    return series


def series_from_rows(values: List[List[float]], s_grid: List[float],
                     labels: Optional[List[str]] = None) -> FunctionalSeries:
    """Build a series from plain lists, reporting shape problems as domain errors."""
    try:
        return FunctionalSeries(values=values, s_grid=s_grid, labels=labels)
    except (ValidationError, ValueError) as e:
        logger.error(f"Rejected series payload: {str(e)}")
        raise ShapeMismatchError(str(e))


def write_csv(series: FunctionalSeries, path: PathLike) -> None:
    """Wide CSV that load_csv reads back to the same series."""
    labels = series.labels or [str(j) for j in range(1, series.n + 1)]
    frame = pd.DataFrame(series.values, columns=[repr(float(s)) for s in series.s_grid])
    frame.insert(0, "label", labels)
    frame.to_csv(path, index=False)


def _jsonable(obj) -> object:
    if isinstance(obj, BaseModel):
        return obj.model_dump(mode="json", by_alias=True)
    if isinstance(obj, (list, tuple)):
        return [_jsonable(x) for x in obj]
    return obj


def write_json(obj: Union[BaseModel, Iterable[BaseModel], dict], path: PathLike) -> None:
    Path(path).write_text(json.dumps(_jsonable(obj), indent=2) + "\n", encoding="utf-8")


def write_first_time_csv(result: FirstTimeResult, s_grid: np.ndarray, path: PathLike) -> None:
    """`s,t_star` per grid point; an empty field means the level is never reached."""
    frame = pd.DataFrame({"s": np.asarray(s_grid, dtype=float), "t_star": [
        np.nan if t is None else t for t in result.per_s
    ]})
    frame.to_csv(path, index=False, na_rep="")


def write_surface_csv(fit: DeviationFit, path: PathLike) -> None:
    """Long table over the evaluation grid for plotting."""
    dev = fit.deviation
    t, s = np.meshgrid(dev.t_grid, dev.s_grid, indexing="ij")
    frame = pd.DataFrame({
        "t": t.ravel(),
        "s": s.ravel(),
        "mu_tilde": fit.surface.values.ravel(),
        "g_hat": np.broadcast_to(fit.benchmark.values[None, :], t.shape).ravel(),
        "deviation": dev.values.ravel(),
    }, columns=SURFACE_COLUMNS)
    frame.to_csv(path, index=False)


def write_study_csv(rows: List[StudyRow], path: PathLike) -> None:
    frame = pd.DataFrame([row.model_dump(mode="json") for row in rows], columns=STUDY_COLUMNS)
    frame.to_csv(path, index=False)
