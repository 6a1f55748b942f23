"""
Median-polish detrending of scattered observations.

Observations are binned onto a rows x columns table over their bounding box
(rows follow y, columns follow x), the table is decomposed into
overall + row effect + column effect + residual by alternating median sweeps,
and the effects are extended to arbitrary sites by piecewise-linear
interpolation between bin centers with flat extrapolation.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import pandas as pd

from src.geometry.sites import Observations, Site
from src.utils.errors import SpatialError

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-6
DEFAULT_MAX_ITER = 50


class EmptyRowOrColumnError(SpatialError):
    """Raised when a whole row or column of bins receives no observation."""
    pass


@dataclass(frozen=True)
class TwoWayTable:
    """
    Rows x columns table of cell values with optional missing cells.

    Attributes:
        cells: (R, C) array, NaN marks a missing cell
        row_centers: Mean y of the sites binned into each row
        col_centers: Mean x of the sites binned into each column
    """
    cells: np.ndarray
    row_centers: np.ndarray
    col_centers: np.ndarray

    def __post_init__(self):
        cells = np.array(self.cells, dtype=float)
        row_centers = np.array(self.row_centers, dtype=float)
        col_centers = np.array(self.col_centers, dtype=float)

        if cells.ndim != 2 or cells.shape[0] < 2 or cells.shape[1] < 2:
            raise ValueError(f"Table must be at least 2x2, got shape {cells.shape}")
        if row_centers.shape != (cells.shape[0],) or col_centers.shape != (cells.shape[1],):
            raise ValueError("Row/column centers must match the table shape")

        present = ~np.isnan(cells)
        empty_rows = np.where(~present.any(axis=1))[0]
        empty_cols = np.where(~present.any(axis=0))[0]
        if len(empty_rows) or len(empty_cols):
            raise EmptyRowOrColumnError(
                f"Empty rows {empty_rows.tolist()} / columns {empty_cols.tolist()}; "
                f"rebin with fewer rows or columns"
            )
        if np.any(np.diff(row_centers) <= 0) or np.any(np.diff(col_centers) <= 0):
            raise ValueError("Row and column centers must be strictly increasing")

        for name, arr in (('cells', cells), ('row_centers', row_centers), ('col_centers', col_centers)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.cells.shape


@dataclass(frozen=True)
class MedianPolishFit:
    """Additive decomposition ``cell = overall + row + col + residual``."""
    overall: float
    row_effects: np.ndarray
    col_effects: np.ndarray
    residuals: np.ndarray
    row_centers: np.ndarray
    col_centers: np.ndarray
    iterations: int
    converged: bool


def default_table_shape(n: int) -> int:
    """Default rows (= columns) for ``n`` observations: ceil(sqrt(n / 2)), at least 2."""
    return max(2, int(math.ceil(math.sqrt(n / 2.0))))


def _bin_index(values: np.ndarray, count: int) -> np.ndarray:
    lo, hi = float(values.min()), float(values.max())
    if hi <= lo:
        return np.zeros(len(values), dtype=int)
    width = (hi - lo) / count
    return np.clip(np.floor((values - lo) / width).astype(int), 0, count - 1)


def bin_to_table(obs: Observations, rows: int, cols: int) -> Tuple[TwoWayTable, np.ndarray]:
    """
    Bin scattered observations onto an equal-width two-way table.

    Args:
        obs: Observations to bin
        rows: Number of row bins (along y), at least 2
        cols: Number of column bins (along x), at least 2

    Returns:
        Tuple of (table, assignment) where ``assignment`` is an (n, 2) array of
        (row, col) cell indices per observation

    Raises:
        EmptyRowOrColumnError: If any row or column of bins receives no observation
    """
    if rows < 2 or cols < 2:
        raise ValueError(f"Need rows >= 2 and cols >= 2, got {rows}x{cols}")

    coords = obs.coords
    df = pd.DataFrame({
        'x': coords[:, 0],
        'y': coords[:, 1],
        'value': obs.values_array,
        'row': _bin_index(coords[:, 1], rows),
        'col': _bin_index(coords[:, 0], cols),
    })

    means = df.groupby(['row', 'col'])['value'].mean().unstack('col')
    cells = means.reindex(index=range(rows), columns=range(cols)).to_numpy(dtype=float)

    row_centers = df.groupby('row')['y'].mean().reindex(range(rows)).to_numpy(dtype=float)
    col_centers = df.groupby('col')['x'].mean().reindex(range(cols)).to_numpy(dtype=float)

    empty_rows = np.where(np.isnan(row_centers))[0]
    empty_cols = np.where(np.isnan(col_centers))[0]
    if len(empty_rows) or len(empty_cols):
        raise EmptyRowOrColumnError(
            f"No observations in rows {empty_rows.tolist()} / columns {empty_cols.tolist()} "
            f"of a {rows}x{cols} binning; rebin with fewer rows or columns"
        )

    table = TwoWayTable(cells, row_centers, col_centers)
    assignment = df[['row', 'col']].to_numpy(dtype=int)
    logger.debug(f"Binned {obs.n} observations into a {rows}x{cols} table, "
                 f"{int(np.isnan(cells).sum())} empty cells")
    return table, assignment


def median_polish(t: TwoWayTable, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> MedianPolishFit:
    """
    Decompose a two-way table by alternating row and column median sweeps.

    Each iteration removes row medians, then column medians; after each half
    sweep the median of the accumulated effect vector is moved into the
    overall effect. Iteration stops once the largest absolute median removed
    in a full sweep is at most ``tol``.

    Args:
        t: Table to decompose
        tol: Convergence tolerance on removed medians
        max_iter: Maximum number of full sweeps

    Returns:
        MedianPolishFit with effects, residuals and convergence information
    """
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    if max_iter < 1:
        raise ValueError(f"max_iter must be at least 1, got {max_iter}")

    residuals = t.cells.copy()
    n_rows, n_cols = residuals.shape
    overall = 0.0
    row_effects = np.zeros(n_rows)
    col_effects = np.zeros(n_cols)
    converged = False
    iterations = 0

    for iterations in range(1, max_iter + 1):
        row_delta = np.nanmedian(residuals, axis=1)
        residuals -= row_delta[:, None]
        row_effects += row_delta
        delta = float(np.median(col_effects))
        col_effects -= delta
        overall += delta

        col_delta = np.nanmedian(residuals, axis=0)
        residuals -= col_delta[None, :]
        col_effects += col_delta
        delta = float(np.median(row_effects))
        row_effects -= delta
        overall += delta

        largest = float(max(np.max(np.abs(row_delta)), np.max(np.abs(col_delta))))
        logger.debug(f"Median polish sweep {iterations}: largest removed median {largest:.3e}")
        if largest <= tol:
            converged = True
            break

    if not converged:
        logger.warning(f"Median polish did not converge within {max_iter} sweeps")

    for arr in (row_effects, col_effects, residuals):
        arr.setflags(write=False)

    return MedianPolishFit(
        overall=overall,
        row_effects=row_effects,
        col_effects=col_effects,
        residuals=residuals,
        row_centers=t.row_centers,
        col_centers=t.col_centers,
        iterations=iterations,
        converged=converged,
    )


def fit_trend(obs: Observations, rows: Optional[int] = None, cols: Optional[int] = None,
              tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> MedianPolishFit:
    """
    Bin observations and median-polish the resulting table.

    Args:
        obs: Observations carrying the trend
        rows: Row bins, defaults to ``default_table_shape(obs.n)``
        cols: Column bins, defaults to ``default_table_shape(obs.n)``
        tol: Median polish tolerance
        max_iter: Median polish sweep cap

    Returns:
        Fitted median polish decomposition
    """
    rows = default_table_shape(obs.n) if rows is None else rows
    cols = default_table_shape(obs.n) if cols is None else cols
    table, _ = bin_to_table(obs, rows, cols)
    fit = median_polish(table, tol=tol, max_iter=max_iter)
    logger.info(f"Median polish trend on {rows}x{cols} table: overall={fit.overall:.6g}, "
                f"{fit.iterations} sweeps, converged={fit.converged}")
    return fit


def trend_values(fit: MedianPolishFit, coords: np.ndarray) -> np.ndarray:
    """Vectorised ``trend_at`` over an (m, 2) coordinate array."""
    coords = np.asarray(coords, dtype=float).reshape(-1, 2)
    row_part = np.interp(coords[:, 1], fit.row_centers, fit.row_effects)
    col_part = np.interp(coords[:, 0], fit.col_centers, fit.col_effects)
    return fit.overall + row_part + col_part


def trend_at(fit: MedianPolishFit, s: Site) -> float:
    """
    Evaluate the fitted trend at a site.

    Row effects are interpolated linearly in y between row centers and column
    effects linearly in x between column centers, both held flat outside.
    """
    return float(trend_values(fit, np.array([[s.x, s.y]]))[0])


def detrend(obs: Observations, fit: MedianPolishFit) -> Observations:
    """Subtract the fitted trend from every observation."""
    return obs.with_values(obs.values_array - trend_values(fit, obs.coords))


def retrend(predicted_residual: float, s: Site, fit: MedianPolishFit) -> float:
    """Add the fitted trend back onto a predicted residual."""
    return predicted_residual + trend_at(fit, s)
