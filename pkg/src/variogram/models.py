"""
Gaussian covariogram model and its weighted least-squares fit.

Parametrization (no practical-range factor)::

    gamma(0) = 0
    gamma(h) = c0 + c1 * (1 - exp(-(h / a)^2))    for h > 0
    c(h)     = (c0 + c1) - gamma(h)

so ``c(0) = c0 + c1`` and ``c(h) = c1 * exp(-(h / a)^2)`` away from the origin.
"""

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
from scipy.optimize import minimize

from src.utils.errors import SpatialError
from .estimator import EmpiricalVariogram

logger = logging.getLogger(__name__)

PARAMETRIZATION = "gamma(h) = c0 + c1*(1 - exp(-(h/a)^2)) for h > 0, gamma(0) = 0"

ArrayLike = Union[float, Sequence[float], np.ndarray]

# Multistart grid, in units of max(gamma_hat) for c0/c1 and of max_lag for a
NUGGET_FRACTIONS = (0.0, 0.25, 0.5, 0.75, 1.0)
SILL_FRACTIONS = (0.0, 0.25, 0.5, 1.0, 2.0)
RANGE_FRACTIONS = (0.05, 0.15, 0.3, 0.6, 1.0, 2.0)
N_REFINED_STARTS = 5
NELDER_MEAD_OPTIONS = {'maxiter': 4000, 'xatol': 1e-10, 'fatol': 1e-14}


class DegenerateVariogramError(SpatialError):
    """Raised when every semivariance estimate is zero."""
    pass


class InsufficientLagsError(SpatialError):
    """Raised when too few lag bins are occupied to fit three parameters."""
    pass


@dataclass(frozen=True)
class GaussianCovariogram:
    """
    Gaussian covariogram with nugget.

    Attributes:
        nugget: c0 >= 0
        partial_sill: c1 >= 0
        range: a > 0
    """
    nugget: float
    partial_sill: float
    range: float

    def __post_init__(self):
        values = (self.nugget, self.partial_sill, self.range)
        if not all(math.isfinite(v) for v in values):
            raise ValueError(f"Covariogram parameters must be finite, got {values}")
        if self.nugget < 0 or self.partial_sill < 0:
            raise ValueError(f"Nugget and partial sill must be nonnegative, got {values}")
        if self.range <= 0:
            raise ValueError(f"Range must be positive, got {self.range}")
        if self.nugget + self.partial_sill <= 0:
            raise ValueError("Nugget plus partial sill must be positive")

    @property
    def sill(self) -> float:
        return self.nugget + self.partial_sill

    def semivariogram(self, h: ArrayLike) -> np.ndarray:
        h = np.asarray(h, dtype=float)
        rising = -np.expm1(-(h / self.range) ** 2)
        return np.where(h > 0, self.nugget + self.partial_sill * rising, 0.0)

    def covariogram(self, h: ArrayLike) -> np.ndarray:
        h = np.asarray(h, dtype=float)
        return np.where(h > 0, self.partial_sill * np.exp(-(h / self.range) ** 2), self.sill)

    def as_dict(self) -> dict:
        return {
            'family': 'gaussian',
            'nugget': float(self.nugget),
            'partial_sill': float(self.partial_sill),
            'range': float(self.range),
            'sill': float(self.sill),
            'parametrization': PARAMETRIZATION,
        }


def _scalar_or_array(result: np.ndarray):
    return float(result) if np.ndim(result) == 0 else result


def semivariogram_value(m: GaussianCovariogram, h: ArrayLike):
    """Semivariogram gamma(h) of the model; 0 at the origin."""
    return _scalar_or_array(m.semivariogram(h))


def covariogram_value(m: GaussianCovariogram, h: ArrayLike):
    """Covariogram c(h) = c(0) - gamma(h) of the model."""
    return _scalar_or_array(m.covariogram(h))


def wls_objective(params: Sequence[float], ev: EmpiricalVariogram) -> float:
    """
    Relative weighted least-squares criterion.

    ``sum_j N(h_j) * (gamma_hat(h_j) / gamma_model(h_j) - 1)^2``

    Args:
        params: (c0, c1, a)
        ev: Empirical semivariogram

    Returns:
        Criterion value, ``inf`` outside the parameter domain
    """
    c0, c1, a = (float(p) for p in params)
    if c0 < 0 or c1 < 0 or a <= 0 or c0 + c1 <= 0:
        return math.inf
    model_gamma = c0 + c1 * -np.expm1(-(ev.lag_centers / a) ** 2)
    if np.any(model_gamma <= 0):
        return math.inf
    return float(np.sum(ev.pair_counts * (ev.gamma_hat / model_gamma - 1.0) ** 2))


def multistart_grid(ev: EmpiricalVariogram) -> np.ndarray:
    """Deterministic starting points (c0, c1, a) for the fit."""
    gamma_scale = float(np.max(ev.gamma_hat))
    lag_scale = float(ev.max_lag)
    points = [
        (f0 * gamma_scale, f1 * gamma_scale, fa * lag_scale)
        for f0, f1, fa in itertools.product(NUGGET_FRACTIONS, SILL_FRACTIONS, RANGE_FRACTIONS)
        if f0 + f1 > 0
    ]
    return np.array(points)


def fit_gaussian_wls(ev: EmpiricalVariogram) -> GaussianCovariogram:
    """
    Fit a Gaussian covariogram to an empirical semivariogram.

    A fixed multistart grid is scored, the best starts are refined with a
    bounded Nelder-Mead search in scaled coordinates, and the best point seen
    overall is returned. The procedure is deterministic.

    Args:
        ev: Empirical semivariogram with at least three occupied bins

    Returns:
        Fitted GaussianCovariogram

    Raises:
        InsufficientLagsError: If fewer than three bins are occupied
        DegenerateVariogramError: If all semivariance estimates are zero
    """
    if ev.n_bins < 3:
        raise InsufficientLagsError(
            f"Fitting three parameters needs at least 3 occupied lag bins, got {ev.n_bins}"
        )
    if np.all(ev.gamma_hat == 0):
        raise DegenerateVariogramError("All semivariance estimates are zero")

    gamma_scale = float(np.max(ev.gamma_hat))
    lag_scale = float(ev.max_lag)
    scale = np.array([gamma_scale, gamma_scale, lag_scale])
    bounds = [
        (0.0, 2.0 * max(NUGGET_FRACTIONS)),
        (0.0, 10.0),
        (1e-3, 2.0 * max(RANGE_FRACTIONS)),
    ]

    grid = multistart_grid(ev)
    grid_scores = np.array([wls_objective(p, ev) for p in grid])
    order = np.argsort(grid_scores, kind='stable')

    best_params = grid[order[0]]
    best_score = float(grid_scores[order[0]])

    def scaled_objective(theta: np.ndarray) -> float:
        return wls_objective(theta * scale, ev)

    for index in order[:N_REFINED_STARTS]:
        if not np.isfinite(grid_scores[index]):
            continue
        result = minimize(scaled_objective, grid[index] / scale, method='Nelder-Mead',
                          bounds=bounds, options=NELDER_MEAD_OPTIONS)
        score = float(result.fun)
        logger.debug(f"Refined start {grid[index]} -> {result.x * scale}, objective {score:.6g}")
        if score < best_score:
            best_score = score
            best_params = result.x * scale

    c0, c1, a = (float(v) for v in best_params)
    model = GaussianCovariogram(nugget=max(c0, 0.0), partial_sill=max(c1, 0.0), range=a)
    logger.info(f"Fitted Gaussian covariogram: nugget={model.nugget:.6g}, "
                f"partial_sill={model.partial_sill:.6g}, range={model.range:.6g} "
                f"(objective {best_score:.6g})")
    return model
