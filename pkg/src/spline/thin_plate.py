"""
Degree-2 thin-plate spline smoothing in the plane.

The smoother is

    g(t0) = a0 + a1 x0 + a2 y0 + sum_i b_i e(t0 - t_i),
    e(h)  = |h|^2 log(|h|^2) / (16 pi),

with ``(b, a)`` solving ``(K + n alpha I) b + X a = Z``, ``X' b = 0``. This
is the dual kriging system with the kernel ``e`` acting as a generalized
covariance, which ``ThinPlateCovariance`` exposes to the kriging module.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from scipy.spatial.distance import pdist, squareform
from scipy.special import xlogy

from src.geometry.sites import Observations, Site, pairwise_distances
from src.kriging.universal import DriftBasis, KrigingSystem, assemble_system, has_full_column_rank
from src.utils.errors import InsufficientDataError, SpatialError
from src.utils.linalg import RCOND_THRESHOLD, BorderedSystem

logger = logging.getLogger(__name__)

PLANAR_DRIFT = DriftBasis(degree=1)
DEFAULT_GRID_SIZE = 40
DEFAULT_GRID_LOW = 1e-6
DEFAULT_GRID_HIGH = 1e4
TIE_TOLERANCE = 1e-12


class CollinearSitesError(SpatialError):
    """Raised when all sites lie on one line, leaving the planar part undetermined."""
    pass


class SmoothingSelectionError(SpatialError):
    """Raised when no smoothing-parameter candidate could be evaluated."""
    pass


def tps_kernel(h):
    """
    Thin-plate kernel ``h^2 log(h^2) / (16 pi)``, zero at the origin.

    Args:
        h: Nonnegative distance or array of distances

    Returns:
        Kernel value(s), float for scalar input
    """
    h = np.asarray(h, dtype=float)
    if np.any(h < 0):
        raise ValueError("Thin-plate kernel is defined for nonnegative distances")
    h2 = h * h
    result = xlogy(h2, h2) / (16.0 * math.pi)
    return float(result) if result.ndim == 0 else result


@dataclass(frozen=True)
class ThinPlateCovariance:
    """
    Thin-plate kernel used as a generalized covariance.

    The smoothing term ``n * alpha`` plays the role of a nugget: it is added
    only where the distance is exactly zero, i.e. on the diagonal of K.
    """
    alpha: float
    n: int

    @property
    def nugget(self) -> float:
        return self.n * self.alpha

    def covariogram(self, h) -> np.ndarray:
        h = np.asarray(h, dtype=float)
        return np.where(h > 0, tps_kernel(h), self.nugget)

    def as_dict(self) -> dict:
        return {'family': 'thin-plate', 'alpha': float(self.alpha), 'n': int(self.n),
                'kernel': 'e(h) = h^2 log(h^2) / (16 pi)'}


@dataclass(frozen=True)
class TpsFit:
    """
    Fitted thin-plate smoothing spline.

    Attributes:
        obs: Observations the spline was fitted to
        alpha: Smoothing parameter
        a: Planar coefficients (a0, a1, a2)
        b: Kernel coefficients, one per site
    """
    obs: Observations
    alpha: float
    a: np.ndarray
    b: np.ndarray
    kernel: np.ndarray = field(repr=False, compare=False)
    bordered: BorderedSystem = field(repr=False, compare=False)


@dataclass(frozen=True)
class AlphaSelection:
    """
    Result of the smoothing-parameter search.

    Attributes:
        alpha: Chosen smoothing parameter
        grid: Candidates in ascending order
        scores: GCV score per candidate, NaN where the fit failed
        criterion: Name of the selection criterion
    """
    alpha: float
    grid: np.ndarray
    scores: np.ndarray
    criterion: str = 'gcv'

    @property
    def failed(self) -> List[float]:
        return [float(a) for a, s in zip(self.grid, self.scores) if np.isnan(s)]


def _validate_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not math.isfinite(alpha) or alpha < 0:
        raise ValueError(f"Smoothing parameter must be finite and nonnegative, got {alpha}")
    return alpha


def _planar_design(obs: Observations) -> np.ndarray:
    if obs.n < 3:
        raise InsufficientDataError(f"Thin-plate spline needs at least 3 observations, got {obs.n}")
    design = PLANAR_DRIFT.design(obs.coords)
    if not has_full_column_rank(design):
        raise CollinearSitesError("Thin-plate spline sites are collinear")
    return design


def fit_tps(obs: Observations, alpha: float, rcond_threshold: float = RCOND_THRESHOLD) -> TpsFit:
    """
    Fit a thin-plate smoothing spline.

    Args:
        obs: Observations at distinct, non-collinear sites (n >= 3)
        alpha: Smoothing parameter; 0 interpolates
        rcond_threshold: Smallest acceptable reciprocal condition estimate

    Returns:
        TpsFit with coefficients (a, b)

    Raises:
        CollinearSitesError: If the sites lie on a line
        IllConditionedError: If the spline system is numerically singular
    """
    alpha = _validate_alpha(alpha)
    design = _planar_design(obs)

    kernel = tps_kernel(squareform(pdist(obs.coords)))
    kernel_alpha = kernel + obs.n * alpha * np.eye(obs.n)
    bordered = BorderedSystem(kernel_alpha, design, rcond_threshold=rcond_threshold,
                              label="thin-plate spline system")
    b, a = bordered.solve_blocks(obs.values_array, np.zeros(3))

    for arr in (kernel, a, b):
        arr.setflags(write=False)
    logger.debug(f"Fitted thin-plate spline: n={obs.n}, alpha={alpha:.6g}, rcond={bordered.rcond:.3e}")
    return TpsFit(obs=obs, alpha=alpha, a=a, b=b, kernel=kernel, bordered=bordered)


def predict_tps_many(fit: TpsFit, coords: np.ndarray) -> np.ndarray:
    """Spline predictions at every row of an (m, 2) coordinate array."""
    coords = np.asarray(coords, dtype=float).reshape(-1, 2)
    planar = PLANAR_DRIFT.design(coords) @ fit.a
    return planar + tps_kernel(pairwise_distances(coords, fit.obs.coords)) @ fit.b


def predict_tps(fit: TpsFit, t0: Site) -> float:
    """Evaluate ``a0 + a1 x0 + a2 y0 + sum_i b_i e(t0 - t_i)``."""
    return float(predict_tps_many(fit, np.array([[t0.x, t0.y]]))[0])


def fitted_values(fit: TpsFit) -> np.ndarray:
    """Spline values at the data sites, ``K b + X a``."""
    return fit.kernel @ fit.b + PLANAR_DRIFT.design(fit.obs.coords) @ fit.a


def roughness(fit: TpsFit) -> float:
    """Roughness penalty ``J = b' K b``, clamped at zero."""
    return max(float(fit.b @ fit.kernel @ fit.b), 0.0)


def penalized_objective(fit: TpsFit) -> float:
    """
    Penalized sum of squares at the fitted spline.

    ``S = sum_i (Z_i - g(t_i))^2 + n * alpha * J``; the factor ``n`` matches
    the ``K + n alpha I`` scaling of the spline system.
    """
    residuals = fit.obs.values_array - fitted_values(fit)
    return float(residuals @ residuals) + fit.obs.n * fit.alpha * roughness(fit)


def tps_as_kriging_system(obs: Observations, alpha: float, reference_n: Optional[int] = None,
                          rcond_threshold: float = RCOND_THRESHOLD) -> KrigingSystem:
    """
    Assemble the dual kriging system with the thin-plate generalized covariance and planar drift.

    Args:
        obs: Observations
        alpha: Smoothing parameter
        reference_n: Sample size the diagonal loading ``n * alpha`` refers to;
            defaults to ``obs.n``. Leave-one-out refits pass the full sample size
            so the loading stays that of the full-data spline.
        rcond_threshold: Conditioning gate
    """
    alpha = _validate_alpha(alpha)
    _planar_design(obs)
    n = obs.n if reference_n is None else int(reference_n)
    return assemble_system(obs, ThinPlateCovariance(alpha=alpha, n=n), PLANAR_DRIFT,
                           rcond_threshold=rcond_threshold)


def _residual_operator(obs: Observations, alpha: float, rcond_threshold: float) -> np.ndarray:
    """``I - A(alpha)`` computed directly as ``n alpha B`` where ``B`` maps Z to b."""
    fit = fit_tps(obs, alpha, rcond_threshold=rcond_threshold)
    n = obs.n
    rhs = np.vstack([np.eye(n), np.zeros((3, n))])
    b_map = fit.bordered.solve(rhs)[:n]
    return n * fit.alpha * b_map


def influence_matrix(obs: Observations, alpha: float,
                     rcond_threshold: float = RCOND_THRESHOLD) -> np.ndarray:
    """
    Matrix ``A(alpha)`` mapping Z to the fitted values at the data sites.

    Solves the bordered system once per unit vector; since
    ``g = Z - n alpha b``, ``A = I - n alpha B`` where ``B`` maps Z to b.
    """
    return np.eye(obs.n) - _residual_operator(obs, alpha, rcond_threshold)


def gcv_score(obs: Observations, alpha: float, rcond_threshold: float = RCOND_THRESHOLD) -> float:
    """Generalized cross-validation score ``n |(I - A) Z|^2 / trace(I - A)^2``."""
    n = obs.n
    complement = _residual_operator(obs, alpha, rcond_threshold)
    residual = complement @ obs.values_array
    trace = float(np.trace(complement))
    if trace <= 0.0:
        return math.inf
    return n * float(residual @ residual) / trace ** 2


def default_alpha_grid(obs: Observations, size: int = DEFAULT_GRID_SIZE,
                       low: float = DEFAULT_GRID_LOW, high: float = DEFAULT_GRID_HIGH) -> np.ndarray:
    """Log-spaced candidates over ``[low * s, high * s]`` with ``s`` the sample variance of Z."""
    s = float(np.var(obs.values_array, ddof=1)) if obs.n > 1 else 0.0
    if not s > 0:
        s = 1.0
    return np.logspace(math.log10(low * s), math.log10(high * s), size)


def select_alpha_gcv(obs: Observations, grid: Optional[Sequence[float]] = None,
                     tie_tolerance: float = TIE_TOLERANCE,
                     rcond_threshold: float = RCOND_THRESHOLD) -> AlphaSelection:
    """
    Choose the smoothing parameter minimizing GCV over a grid.

    Args:
        obs: Observations, at least five
        grid: Positive candidates; defaults to ``default_alpha_grid(obs)``
        tie_tolerance: Scores within this of the minimum count as ties,
            resolved towards the smallest alpha
        rcond_threshold: Conditioning gate for each candidate fit

    Returns:
        AlphaSelection with the chosen alpha and all scores

    Raises:
        SmoothingSelectionError: If every candidate fails
    """
    if obs.n < 5:
        raise InsufficientDataError(f"Smoothing selection needs at least 5 observations, got {obs.n}")

    candidates = default_alpha_grid(obs) if grid is None else np.asarray(grid, dtype=float)
    candidates = np.unique(candidates)
    if candidates.size == 0 or np.any(~np.isfinite(candidates)) or np.any(candidates <= 0):
        raise ValueError("Smoothing grid must contain positive finite values")

    scores = np.full(candidates.size, np.nan)
    for i, alpha in enumerate(candidates):
        try:
            scores[i] = gcv_score(obs, alpha, rcond_threshold=rcond_threshold)
        except SpatialError as e:
            logger.warning(f"Skipping smoothing candidate alpha={alpha:.6g}: {e}")

    if np.all(np.isnan(scores)):
        raise SmoothingSelectionError("No smoothing candidate could be fitted")

    best = float(np.nanmin(scores))
    tied = np.where(scores <= best + tie_tolerance)[0]
    chosen = float(candidates[tied[0]])

    scores.setflags(write=False)
    candidates.setflags(write=False)
    logger.info(f"Selected alpha={chosen:.6g} by GCV (score {best:.6g}) over {candidates.size} candidates")
    return AlphaSelection(alpha=chosen, grid=candidates, scores=scores)
