"""
Ordinary and universal kriging in primal and dual form.

The drift is ``mu(t) = sum_j beta_j f_j(t)`` with ``f = (1,)`` (ordinary
kriging) or ``f = (1, x, y)`` (universal kriging with planar drift). Both
forms share the bordered matrix ``[[Sigma, X], [X', 0]]``:

* primal: weights ``lambda`` and kriging variance per target site;
* dual: coefficients ``(V1, V2)`` solved once, then
  ``Z_hat(t0) = V1' C + V2' x`` in O(n) per site.

Any object with a ``covariogram(h)`` method can serve as the covariance,
including generalized covariances such as the thin-plate kernel.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional, Protocol

import numpy as np
from scipy.spatial.distance import pdist, squareform

from src.geometry.sites import Observations, Site, pairwise_distances
from src.utils.errors import IllConditionedError, InsufficientDataError, SpatialError
from src.utils.linalg import RCOND_THRESHOLD, BorderedSystem, EquilibratedLU, kernel_scale

logger = logging.getLogger(__name__)

VARIANCE_CLAMP_TOLERANCE = 1e-10


class RankDeficientDriftError(SpatialError):
    """Raised when the drift design matrix lacks full column rank."""
    pass


class CovarianceModel(Protocol):
    """Anything that evaluates a (generalized) covariance at distances ``h``."""

    def covariogram(self, h) -> np.ndarray:
        ...


@dataclass(frozen=True)
class DriftBasis:
    """
    Drift basis functions.

    Attributes:
        degree: 0 for ``f = (1,)``, 1 for ``f = (1, x, y)``
    """
    degree: int = 0

    def __post_init__(self):
        if self.degree not in (0, 1):
            raise ValueError(f"Drift degree must be 0 or 1, got {self.degree}")

    @property
    def p(self) -> int:
        """Number of non-constant basis functions."""
        return 0 if self.degree == 0 else 2

    @property
    def size(self) -> int:
        return self.p + 1

    def design(self, coords: np.ndarray) -> np.ndarray:
        """Evaluate the basis at an (m, 2) coordinate array, giving an (m, p+1) matrix."""
        coords = np.asarray(coords, dtype=float).reshape(-1, 2)
        if self.degree == 0:
            return np.ones((len(coords), 1))
        return np.column_stack([np.ones(len(coords)), coords[:, 0], coords[:, 1]])

    def at(self, s: Site) -> np.ndarray:
        return self.design(np.array([[s.x, s.y]]))[0]


def has_full_column_rank(design: np.ndarray) -> bool:
    """
    Check the drift design for full column rank.

    Non-constant columns are centered and scaled first so that the answer
    does not depend on where the coordinate origin sits.
    """
    design = np.asarray(design, dtype=float)
    n, m = design.shape
    if n < m:
        return False
    standardized = design.copy()
    for j in range(1, m):
        column = standardized[:, j] - standardized[:, j].mean()
        spread = np.max(np.abs(column))
        if spread == 0.0:
            return False
        standardized[:, j] = column / spread
    return int(np.linalg.matrix_rank(standardized)) == m


@dataclass(frozen=True)
class KrigingSystem:
    """
    Assembled kriging system.

    Attributes:
        obs: Observations the system was built from
        model: Covariance model
        basis: Drift basis
        sigma: (n, n) covariance matrix with entries c(t_i - t_j)
        design: (n, p+1) drift design matrix X
        rcond: Reciprocal condition estimate of the equilibrated bordered matrix
    """
    obs: Observations
    model: CovarianceModel
    basis: DriftBasis
    sigma: np.ndarray
    design: np.ndarray
    rcond: float
    bordered: BorderedSystem = field(repr=False, compare=False)
    sigma_factor: Optional[EquilibratedLU] = field(default=None, repr=False, compare=False)
    sigma_error: Optional[str] = field(default=None, repr=False, compare=False)

    @property
    def c_zero(self) -> float:
        return float(np.asarray(self.model.covariogram(0.0)))


@dataclass(frozen=True)
class DualKrigingFit:
    """Solution ``(V1, V2)`` of ``Sigma V1 + X V2 = Z``, ``X' V1 = 0``."""
    system: KrigingSystem
    v1: np.ndarray
    v2: np.ndarray


@dataclass(frozen=True)
class KrigingPrediction:
    """
    Primal kriging prediction at one site.

    Attributes:
        value: Predicted value lambda' Z
        variance: Kriging variance, clamped at zero
        weights: Kriging weights lambda
        lagrange: Lagrange multipliers m enforcing X' lambda = x
    """
    value: float
    variance: float
    weights: Optional[np.ndarray] = None
    lagrange: Optional[np.ndarray] = None

    @property
    def sigma(self) -> float:
        return float(np.sqrt(self.variance))


def assemble_system(obs: Observations, model: CovarianceModel, basis: DriftBasis,
                    rcond_threshold: float = RCOND_THRESHOLD) -> KrigingSystem:
    """
    Build and factor the kriging system for a set of observations.

    Args:
        obs: Observations at distinct sites
        model: Covariance model evaluated at inter-site distances
        basis: Drift basis
        rcond_threshold: Smallest acceptable reciprocal condition estimate

    Returns:
        KrigingSystem ready for primal or dual prediction

    Raises:
        InsufficientDataError: If obs.n < p + 1
        RankDeficientDriftError: If the design matrix is rank deficient (collinear sites)
        IllConditionedError: If the bordered matrix is numerically singular
    """
    if obs.n < basis.size:
        raise InsufficientDataError(
            f"Drift of degree {basis.degree} needs at least {basis.size} observations, got {obs.n}"
        )

    coords = obs.coords
    design = basis.design(coords)
    if not has_full_column_rank(design):
        raise RankDeficientDriftError(
            f"Drift design of degree {basis.degree} is rank deficient; sites are collinear"
        )

    distances = squareform(pdist(coords)) if obs.n > 1 else np.zeros((1, 1))
    sigma = np.asarray(model.covariogram(distances), dtype=float)

    bordered = BorderedSystem(sigma, design, rcond_threshold=rcond_threshold,
                              label="kriging bordered matrix")

    sigma_factor = None
    sigma_error = None
    try:
        s = np.full(obs.n, 1.0 / np.sqrt(kernel_scale(sigma)))
        sigma_factor = EquilibratedLU(sigma, scale=s, rcond_threshold=rcond_threshold,
                                      label="covariance matrix")
    except IllConditionedError as e:
        sigma_error = str(e)
        logger.warning(f"Primal kriging unavailable: {e}")

    for arr in (sigma, design):
        arr.setflags(write=False)

    logger.debug(f"Assembled kriging system: n={obs.n}, degree={basis.degree}, rcond={bordered.rcond:.3e}")
    return KrigingSystem(obs=obs, model=model, basis=basis, sigma=sigma, design=design,
                         rcond=bordered.rcond, bordered=bordered,
                         sigma_factor=sigma_factor, sigma_error=sigma_error)


def _target_covariances(sys: KrigingSystem, coords: np.ndarray) -> np.ndarray:
    """(m, n) covariances between target sites and observation sites."""
    return np.asarray(sys.model.covariogram(pairwise_distances(coords, sys.obs.coords)), dtype=float)


def predict_primal(sys: KrigingSystem, t0: Site) -> KrigingPrediction:
    """
    Kriging weights, prediction and variance at ``t0``.

    ``lambda = Sigma^{-1} [C + X (X' Sigma^{-1} X)^{-1} (x - X' Sigma^{-1} C)]`` and
    ``sigma^2 = c(0) - C' Sigma^{-1} C + r' (X' Sigma^{-1} X)^{-1} r`` with
    ``r = x - X' Sigma^{-1} C``.

    Args:
        sys: Assembled system
        t0: Target site

    Returns:
        KrigingPrediction carrying weights and Lagrange multipliers

    Raises:
        IllConditionedError: If the covariance matrix could not be factored
    """
    if sys.sigma_factor is None:
        raise IllConditionedError(sys.sigma_error or "covariance matrix could not be factored")

    coords0 = np.array([[t0.x, t0.y]])
    c = _target_covariances(sys, coords0)[0]
    x = sys.basis.design(coords0)[0]
    design = sys.design

    sigma_inv_c = sys.sigma_factor.solve(c)
    sigma_inv_x = sys.sigma_factor.solve(design)
    gram = design.T @ sigma_inv_x
    r = x - design.T @ sigma_inv_c
    multipliers = np.linalg.solve(gram, r)

    weights = sigma_inv_c + sigma_inv_x @ multipliers
    value = float(weights @ sys.obs.values_array)

    variance = _clamp_variance(sys.c_zero - c @ sigma_inv_c + r @ multipliers, sys.c_zero, t0)
    return KrigingPrediction(value=value, variance=variance, weights=weights, lagrange=multipliers)


def predict_bordered(sys: KrigingSystem, t0: Site) -> KrigingPrediction:
    """
    Kriging weights, prediction and variance at ``t0`` from the bordered factorization.

    Solves ``Sigma lambda - X m = C``, ``X' lambda = x`` directly, so ``Sigma``
    alone may be singular or indefinite, as with the thin-plate generalized
    covariance. The variance is ``c(0) - lambda' C + m' x``.
    """
    coords0 = np.array([[t0.x, t0.y]])
    c = _target_covariances(sys, coords0)[0]
    x = sys.basis.design(coords0)[0]

    weights, mu = sys.bordered.solve_blocks(c, x)
    multipliers = -mu
    value = float(weights @ sys.obs.values_array)
    variance = _clamp_variance(sys.c_zero - weights @ c + multipliers @ x, sys.c_zero, t0)
    return KrigingPrediction(value=value, variance=variance, weights=weights, lagrange=multipliers)


def _clamp_variance(variance: float, c_zero: float, t0: Site) -> float:
    variance = float(variance)
    if variance < 0.0:
        if variance < -VARIANCE_CLAMP_TOLERANCE * max(abs(c_zero), 1.0):
            logger.warning(f"Kriging variance {variance:.3e} below zero beyond round-off at ({t0.x}, {t0.y})")
        variance = 0.0
    return variance


def fit_dual(sys: KrigingSystem) -> DualKrigingFit:
    """
    Solve the dual kriging equations ``Sigma V1 + X V2 = Z``, ``X' V1 = 0``.

    Args:
        sys: Assembled system

    Returns:
        DualKrigingFit with coefficient vectors V1 (n) and V2 (p+1)
    """
    v1, v2 = sys.bordered.solve_blocks(sys.obs.values_array, np.zeros(sys.basis.size))
    v1.setflags(write=False)
    v2.setflags(write=False)
    return DualKrigingFit(system=sys, v1=v1, v2=v2)


def predict_dual_many(fit: DualKrigingFit, coords: np.ndarray) -> np.ndarray:
    """Dual predictions ``V1' C + V2' x`` at every row of an (m, 2) coordinate array."""
    coords = np.asarray(coords, dtype=float).reshape(-1, 2)
    c = _target_covariances(fit.system, coords)
    x = fit.system.basis.design(coords)
    return c @ fit.v1 + x @ fit.v2


def predict_dual(fit: DualKrigingFit, t0: Site) -> float:
    """Dual kriging prediction at ``t0``."""
    return float(predict_dual_many(fit, np.array([[t0.x, t0.y]]))[0])
