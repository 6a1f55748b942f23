"""
Leave-one-out cross-validation and the standardized MSP criterion.

``MSP = sqrt( (1/n) sum_j ((Z(t_j) - Z_hat_{-j}(t_j)) / sigma_{-j}(t_j))^2 )``
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from src.geometry.sites import Observations, Site
from src.kriging.universal import KrigingSystem, fit_dual
from src.utils.errors import InsufficientDataError, SpatialError

logger = logging.getLogger(__name__)

ZERO_SIGMA = 1e-12

Predictor = Callable[[Site], Tuple[float, float]]
"""Maps a target site to ``(prediction, sigma)``."""

MethodFactory = Callable[[Observations, "RefitPolicy"], Predictor]
"""Builds a predictor from training observations under a refit policy."""


class RefitPolicy(str, Enum):
    """Whether hyperparameters are re-estimated for each deletion."""
    FIXED = 'fixed'
    STRICT = 'strict'


class FitFailureError(SpatialError):
    """Raised when the fit without observation ``index`` fails."""

    def __init__(self, index: int, cause: Exception):
        super().__init__(f"leave-one-out fit without site {index} failed: {cause}")
        self.index = index
        self.cause = cause


class ZeroSigmaError(SpatialError):
    """Raised when a leave-one-out prediction has (near) zero standard error."""

    def __init__(self, index: int, sigma: float):
        super().__init__(f"prediction standard error at site {index} is {sigma:.3e}")
        self.index = index
        self.sigma = sigma


@dataclass(frozen=True)
class LooRecord:
    """One leave-one-out prediction and its standardized residual."""
    site_index: int
    truth: float
    prediction: float
    sigma: float
    standardized_residual: float

    @classmethod
    def build(cls, site_index: int, truth: float, prediction: float, sigma: float) -> "LooRecord":
        if not sigma > 0:
            raise ZeroSigmaError(site_index, sigma)
        return cls(
            site_index=int(site_index),
            truth=float(truth),
            prediction=float(prediction),
            sigma=float(sigma),
            standardized_residual=(float(truth) - float(prediction)) / float(sigma),
        )

    def as_dict(self) -> dict:
        return {
            'site_index': self.site_index,
            'truth': self.truth,
            'prediction': self.prediction,
            'sigma': self.sigma,
            'standardized_residual': self.standardized_residual,
        }


def msp(records: Sequence[LooRecord]) -> float:
    """Root mean squared standardized residual; records are summed in site order."""
    ordered = sorted(records, key=lambda r: r.site_index)
    residuals = np.array([r.standardized_residual for r in ordered])
    return float(math.sqrt(np.mean(residuals ** 2)))


def _offsets_and_targets(obs: Observations, offsets: Optional[Sequence[float]],
                         targets: Optional[Sequence[float]]):
    offsets = np.zeros(obs.n) if offsets is None else np.asarray(offsets, dtype=float)
    targets = obs.values_array + offsets if targets is None else np.asarray(targets, dtype=float)
    if offsets.shape != (obs.n,) or targets.shape != (obs.n,):
        raise ValueError("offsets and targets must have one entry per observation")
    return offsets, targets


def loo_msp(obs: Observations, method: MethodFactory,
            refit_policy: RefitPolicy = RefitPolicy.FIXED,
            offsets: Optional[Sequence[float]] = None,
            targets: Optional[Sequence[float]] = None,
            zero_sigma: float = ZERO_SIGMA) -> Tuple[float, List[LooRecord]]:
    """
    Leave-one-out MSP of a prediction method.

    For each site j the method is fitted on the other n - 1 observations and
    asked for a prediction and standard error at t_j.

    Args:
        obs: Observations (the field the method is fitted to), n >= 4
        method: Factory building a predictor from training observations
        refit_policy: Passed through to the factory
        offsets: Values added to every prediction before comparison (re-trending)
        targets: True values to compare against; default ``obs.values + offsets``
        zero_sigma: Standard errors at or below this are rejected

    Returns:
        Tuple of (MSP, records ordered by site index)

    Raises:
        FitFailureError: If any leave-one-out fit fails
        ZeroSigmaError: If any standard error is at or below ``zero_sigma``
    """
    if obs.n < 4:
        raise InsufficientDataError(f"Leave-one-out needs at least 4 observations, got {obs.n}")
    offsets, targets = _offsets_and_targets(obs, offsets, targets)

    records: List[LooRecord] = []
    for j in range(obs.n):
        try:
            predictor = method(obs.without(j), refit_policy)
            prediction, sigma = predictor(obs.sites[j])
        except SpatialError as e:
            raise FitFailureError(j, e) from e
        if not sigma > zero_sigma:
            raise ZeroSigmaError(j, sigma)
        records.append(LooRecord.build(j, targets[j], prediction + offsets[j], sigma))

    value = msp(records)
    logger.debug(f"Leave-one-out over {obs.n} sites ({refit_policy.value}): MSP={value:.6g}")
    return value, records


def bordered_loo(sys: KrigingSystem, offsets: Optional[Sequence[float]] = None,
                 targets: Optional[Sequence[float]] = None,
                 zero_sigma: float = ZERO_SIGMA) -> Tuple[float, List[LooRecord]]:
    """
    Leave-one-out MSP from a single factorization of the bordered system.

    With ``Q`` the inverse of ``[[Sigma, X], [X', 0]]`` and ``V1`` the dual
    coefficients, the deleted-site error is ``V1_j / Q_jj`` and the kriging
    variance ``1 / Q_jj``. This matches refitting the same covariance on
    n - 1 sites and predicting with ``predict_primal``.

    Args:
        sys: Kriging system assembled on all observations
        offsets: Values added to every prediction (re-trending)
        targets: True values; default ``Z + offsets``
        zero_sigma: Standard errors at or below this are rejected

    Returns:
        Tuple of (MSP, records ordered by site index)
    """
    obs = sys.obs
    if obs.n < 4:
        raise InsufficientDataError(f"Leave-one-out needs at least 4 observations, got {obs.n}")
    offsets, targets = _offsets_and_targets(obs, offsets, targets)

    q_diag = np.diag(sys.bordered.inverse())[:obs.n]
    v1 = fit_dual(sys).v1
    errors = v1 / q_diag
    predictions = obs.values_array - errors

    records: List[LooRecord] = []
    for j in range(obs.n):
        sigma = math.sqrt(1.0 / q_diag[j]) if q_diag[j] > 0 else 0.0
        if not sigma > zero_sigma:
            raise ZeroSigmaError(j, sigma)
        records.append(LooRecord.build(j, targets[j], predictions[j] + offsets[j], sigma))

    value = msp(records)
    logger.debug(f"Bordered leave-one-out over {obs.n} sites: MSP={value:.6g}")
    return value, records
