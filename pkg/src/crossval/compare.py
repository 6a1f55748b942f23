"""
Kriging versus thin-plate spline comparison by leave-one-out MSP.

Pipeline: optional median-polish detrending, then on the residual field
(1) classic semivariogram + Gaussian covariogram fit and kriging LOO, and
(2) smoothing-parameter selection and spline LOO. Predictions are re-trended
before residuals are formed. The spline standard error is the kriging
variance of the bordered system with ``K + n alpha I`` as generalized
covariance and planar drift.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from src.geometry.sites import Observations, Site
from src.kriging.universal import DriftBasis, assemble_system, predict_bordered, predict_primal
from src.spline.thin_plate import (
    DEFAULT_GRID_HIGH,
    DEFAULT_GRID_LOW,
    DEFAULT_GRID_SIZE,
    default_alpha_grid,
    select_alpha_gcv,
    tps_as_kriging_system,
)
from src.trend.median_polish import MedianPolishFit, detrend, fit_trend, trend_values
from src.utils.errors import InsufficientDataError, SpatialError
from src.utils.linalg import RCOND_THRESHOLD
from src.variogram.estimator import NoPairsError, empirical_semivariogram
from src.variogram.models import (
    PARAMETRIZATION,
    DegenerateVariogramError,
    GaussianCovariogram,
    InsufficientLagsError,
    fit_gaussian_wls,
)
from .loo import LooRecord, Predictor, RefitPolicy, bordered_loo, loo_msp

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
TIE_TOLERANCE = 1e-12
MIN_OBSERVATIONS = 8
SPLINE_SIGMA_METHOD = (
    "kriging variance of the bordered system with K + n*alpha*I as generalized "
    "covariance and planar drift"
)
ALPHA_CRITERION = "generalized cross-validation (GCV)"
MODEL_SOURCE_WLS = "weighted least squares"
MODEL_SOURCE_FALLBACK = "pure nugget fallback"
MODEL_SOURCE_GIVEN = "given"


class PipelineStageError(SpatialError):
    """Wraps a component failure with the pipeline stage it happened in."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage
        self.cause = cause


class Winner(str, Enum):
    KRIGING = 'kriging'
    SPLINE = 'spline'
    TIE = 'tie'


@dataclass(frozen=True)
class KrigingConfig:
    """Kriging settings; ``model`` bypasses variogram estimation when given."""
    drift_degree: int = 0
    n_bins: int = 15
    max_lag: Optional[float] = None
    model: Optional[GaussianCovariogram] = None
    pure_nugget_fallback: bool = False


@dataclass(frozen=True)
class SplineConfig:
    """
    Spline settings.

    ``alpha=None`` selects the smoothing parameter by GCV, over ``grid`` when
    given and otherwise over ``grid_size`` log-spaced values spanning
    ``[grid_low, grid_high]`` times the sample variance.
    """
    alpha: Optional[float] = None
    grid: Optional[Tuple[float, ...]] = None
    grid_size: int = DEFAULT_GRID_SIZE
    grid_low: float = DEFAULT_GRID_LOW
    grid_high: float = DEFAULT_GRID_HIGH


@dataclass(frozen=True)
class TrendConfig:
    """Trend settings; ``method`` is ``'none'`` or ``'median-polish'``."""
    method: str = 'none'
    rows: Optional[int] = None
    cols: Optional[int] = None
    tol: float = 1e-6
    max_iter: int = 50

    def __post_init__(self):
        if self.method not in ('none', 'median-polish'):
            raise ValueError(f"Unknown trend method '{self.method}'")

    @property
    def enabled(self) -> bool:
        return self.method == 'median-polish'


@dataclass(frozen=True)
class ComparisonReport:
    """Leave-one-out MSP of both methods and the per-site records behind them."""
    msp_kriging: float
    msp_spline: float
    winner: Winner
    kriging_records: List[LooRecord]
    spline_records: List[LooRecord]
    metadata: Dict[str, Any] = field(default_factory=dict)

    def as_dict(self) -> Dict[str, Any]:
        """Report document: schema version, both MSPs, winner, metadata and per-site records."""
        covariogram = self.metadata.get('kriging', {}).get('covariogram', {})
        return {
            'schema_version': SCHEMA_VERSION,
            'msp_kriging': float(self.msp_kriging),
            'msp_spline': float(self.msp_spline),
            'winner': self.winner.value,
            'nugget': covariogram.get('nugget'),
            'partial_sill': covariogram.get('partial_sill'),
            'range': covariogram.get('range'),
            'alpha': self.metadata.get('spline', {}).get('alpha'),
            'metadata': self.metadata,
            'records': {
                'kriging': [r.as_dict() for r in self.kriging_records],
                'spline': [r.as_dict() for r in self.spline_records],
            },
        }


def decide_winner(msp_kriging: float, msp_spline: float, tolerance: float = TIE_TOLERANCE) -> Winner:
    """The method with strictly smaller MSP wins; differences within ``tolerance`` tie."""
    if abs(msp_kriging - msp_spline) <= tolerance:
        return Winner.TIE
    return Winner.KRIGING if msp_kriging < msp_spline else Winner.SPLINE


def estimate_covariogram(obs: Observations, n_bins: int = 15, max_lag: Optional[float] = None,
                         pure_nugget_fallback: bool = False) -> Tuple[GaussianCovariogram, str]:
    """
    Classic semivariogram followed by the Gaussian WLS fit.

    With ``pure_nugget_fallback`` a semivariogram that cannot be fitted
    (degenerate, too few occupied bins, or no pairs in range) yields a
    pure-nugget model at the sample variance instead of an error.

    Returns:
        Tuple of (model, source) where source names how the model was obtained
    """
    try:
        ev = empirical_semivariogram(obs, n_bins=n_bins, max_lag=max_lag)
        return fit_gaussian_wls(ev), MODEL_SOURCE_WLS
    except (DegenerateVariogramError, InsufficientLagsError, NoPairsError) as e:
        if not pure_nugget_fallback:
            raise
        variance = float(np.var(obs.values_array, ddof=1)) if obs.n > 1 else 0.0
        nugget = variance if variance > 0 else 1.0
        logger.warning(f"{e}; falling back to pure nugget {nugget:.6g}")
        return GaussianCovariogram(nugget=nugget, partial_sill=0.0, range=1.0), MODEL_SOURCE_FALLBACK


@dataclass(frozen=True)
class KrigingMethod:
    """Kriging predictor factory for leave-one-out."""
    model: GaussianCovariogram
    basis: DriftBasis
    n_bins: int = 15
    max_lag: Optional[float] = None
    pure_nugget_fallback: bool = False
    estimate: bool = True
    rcond_threshold: float = RCOND_THRESHOLD

    def __call__(self, train: Observations, policy: RefitPolicy) -> Predictor:
        model = self.model
        if policy is RefitPolicy.STRICT and self.estimate:
            model, _ = estimate_covariogram(train, self.n_bins, self.max_lag, self.pure_nugget_fallback)
        system = assemble_system(train, model, self.basis, self.rcond_threshold)

        def predict(site: Site) -> Tuple[float, float]:
            p = predict_primal(system, site)
            return p.value, p.sigma

        return predict


@dataclass(frozen=True)
class SplineMethod:
    """Spline predictor factory for leave-one-out (standard error via the kriging analogue)."""
    alpha: float
    reference_n: int
    select: bool = False
    grid: Optional[Tuple[float, ...]] = None
    rcond_threshold: float = RCOND_THRESHOLD

    def __call__(self, train: Observations, policy: RefitPolicy) -> Predictor:
        if policy is RefitPolicy.STRICT:
            alpha = self.alpha
            if self.select:
                alpha = select_alpha_gcv(train, self.grid, rcond_threshold=self.rcond_threshold).alpha
            system = tps_as_kriging_system(train, alpha, rcond_threshold=self.rcond_threshold)
        else:
            system = tps_as_kriging_system(train, self.alpha, reference_n=self.reference_n,
                                           rcond_threshold=self.rcond_threshold)

        def predict(site: Site) -> Tuple[float, float]:
            p = predict_bordered(system, site)
            return p.value, p.sigma

        return predict


def _run_stage(stage: str, func, *args, **kwargs):
    try:
        return func(*args, **kwargs)
    except PipelineStageError:
        raise
    except SpatialError as e:
        raise PipelineStageError(stage, e) from e


def compare_predictors(obs: Observations, kriging_method, spline_method,
                       refit_policy: RefitPolicy = RefitPolicy.FIXED,
                       offsets: Optional[np.ndarray] = None,
                       targets: Optional[np.ndarray] = None,
                       metadata: Optional[Dict[str, Any]] = None) -> ComparisonReport:
    """
    Leave-one-out comparison of two arbitrary predictor factories.

    Args:
        obs: Field both methods are fitted to (residuals when detrending)
        kriging_method: Factory for the kriging side
        spline_method: Factory for the spline side
        refit_policy: Leave-one-out refit policy
        offsets: Trend values added back to predictions
        targets: Original observations to compare against
        metadata: Extra report metadata

    Returns:
        ComparisonReport
    """
    msp_k, records_k = _run_stage('kriging-loo', loo_msp, obs, kriging_method, refit_policy,
                                  offsets=offsets, targets=targets)
    msp_s, records_s = _run_stage('spline-loo', loo_msp, obs, spline_method, refit_policy,
                                  offsets=offsets, targets=targets)
    winner = decide_winner(msp_k, msp_s)
    logger.info(f"MSP kriging={msp_k:.6g}, spline={msp_s:.6g}, winner={winner.value}")
    return ComparisonReport(msp_kriging=msp_k, msp_spline=msp_s, winner=winner,
                            kriging_records=records_k, spline_records=records_s,
                            metadata=dict(metadata or {}))


def compare_methods(obs: Observations,
                    kriging_config: KrigingConfig = KrigingConfig(),
                    spline_config: SplineConfig = SplineConfig(),
                    trend_config: TrendConfig = TrendConfig(),
                    refit_policy: RefitPolicy = RefitPolicy.FIXED,
                    fast: bool = True,
                    rcond_threshold: float = RCOND_THRESHOLD) -> ComparisonReport:
    """
    Run the full kriging-versus-spline comparison.

    Args:
        obs: Observations, n >= 8
        kriging_config: Variogram and drift settings
        spline_config: Smoothing-parameter settings
        trend_config: Detrending settings
        refit_policy: ``FIXED`` fits covariogram, alpha and trend once on all
            data; ``STRICT`` re-estimates covariogram and alpha per deletion
        fast: Use the single-factorization leave-one-out path under ``FIXED``
        rcond_threshold: Conditioning gate for every linear system solved

    Returns:
        ComparisonReport with both MSPs, the winner and full metadata

    Raises:
        PipelineStageError: Any component failure, labelled with its stage
    """
    if obs.n < MIN_OBSERVATIONS:
        raise PipelineStageError(
            'input', InsufficientDataError(f"comparison needs at least {MIN_OBSERVATIONS} observations, got {obs.n}")
        )

    trend_fit: Optional[MedianPolishFit] = None
    residual_obs = obs
    offsets = np.zeros(obs.n)
    if trend_config.enabled:
        trend_fit = _run_stage('trend', fit_trend, obs, trend_config.rows, trend_config.cols,
                               trend_config.tol, trend_config.max_iter)
        residual_obs = detrend(obs, trend_fit)
        offsets = trend_values(trend_fit, obs.coords)
    targets = obs.values_array

    model = kriging_config.model
    model_source = MODEL_SOURCE_GIVEN
    if model is None:
        model, model_source = _run_stage('variogram', estimate_covariogram, residual_obs,
                                         kriging_config.n_bins, kriging_config.max_lag,
                                         kriging_config.pure_nugget_fallback)
    basis = DriftBasis(kriging_config.drift_degree)

    selection = None
    grid = spline_config.grid
    alpha = spline_config.alpha
    if alpha is None:
        if grid is None:
            grid = tuple(default_alpha_grid(residual_obs, spline_config.grid_size,
                                            spline_config.grid_low, spline_config.grid_high))
        selection = _run_stage('smoothing', select_alpha_gcv, residual_obs, grid,
                               rcond_threshold=rcond_threshold)
        alpha = selection.alpha

    metadata = _report_metadata(obs, model, model_source, basis, alpha, selection is not None,
                                kriging_config, trend_config, trend_fit, refit_policy)
    kriging_method = KrigingMethod(model=model, basis=basis, n_bins=kriging_config.n_bins,
                                   max_lag=kriging_config.max_lag,
                                   pure_nugget_fallback=kriging_config.pure_nugget_fallback,
                                   estimate=kriging_config.model is None,
                                   rcond_threshold=rcond_threshold)
    spline_method = SplineMethod(alpha=alpha, reference_n=residual_obs.n,
                                 select=selection is not None, grid=grid,
                                 rcond_threshold=rcond_threshold)

    if fast and refit_policy is RefitPolicy.FIXED:
        system_k = _run_stage('kriging-loo', assemble_system, residual_obs, model, basis,
                              rcond_threshold)
        msp_k, records_k = _run_stage('kriging-loo', bordered_loo, system_k, offsets, targets)
        system_s = _run_stage('spline-loo', tps_as_kriging_system, residual_obs, alpha,
                              rcond_threshold=rcond_threshold)
        msp_s, records_s = _run_stage('spline-loo', bordered_loo, system_s, offsets, targets)
        winner = decide_winner(msp_k, msp_s)
        logger.info(f"MSP kriging={msp_k:.6g}, spline={msp_s:.6g}, winner={winner.value}")
        return ComparisonReport(msp_kriging=msp_k, msp_spline=msp_s, winner=winner,
                                kriging_records=records_k, spline_records=records_s,
                                metadata=metadata)

    return compare_predictors(residual_obs, kriging_method, spline_method, refit_policy,
                              offsets=offsets, targets=targets, metadata=metadata)


def _report_metadata(obs: Observations, model: GaussianCovariogram, model_source: str,
                     basis: DriftBasis, alpha: float,
                     alpha_selected: bool, kriging_config: KrigingConfig, trend_config: TrendConfig,
                     trend_fit: Optional[MedianPolishFit], refit_policy: RefitPolicy) -> Dict[str, Any]:
    trend: Dict[str, Any] = {'method': trend_config.method}
    if trend_fit is not None:
        trend.update({
            'rows': int(len(trend_fit.row_effects)),
            'cols': int(len(trend_fit.col_effects)),
            'tol': float(trend_config.tol),
            'max_iter': int(trend_config.max_iter),
            'overall': float(trend_fit.overall),
            'iterations': int(trend_fit.iterations),
            'converged': bool(trend_fit.converged),
        })
    return {
        'n': obs.n,
        'refit_policy': refit_policy.value,
        'msp_formula': 'sqrt(mean(((Z - Z_hat_-j) / sigma_-j)^2))',
        'trend': trend,
        'kriging': {
            'drift_degree': basis.degree,
            'variogram_estimator': 'classic (Matheron)',
            'n_bins': kriging_config.n_bins,
            'max_lag': kriging_config.max_lag,
            'model_source': model_source,
            'covariogram': model.as_dict(),
            'parametrization': PARAMETRIZATION,
        },
        'spline': {
            'alpha': float(alpha),
            'alpha_selection': ALPHA_CRITERION if alpha_selected else 'given',
            'sigma_method': SPLINE_SIGMA_METHOD,
        },
    }
