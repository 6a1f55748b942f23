"""
Leave-one-out cross-validation and the kriging/spline comparison.
"""

from .compare import (
    ComparisonReport,
    KrigingConfig,
    KrigingMethod,
    PipelineStageError,
    SplineConfig,
    SplineMethod,
    TrendConfig,
    Winner,
    compare_methods,
    compare_predictors,
    decide_winner,
    estimate_covariogram,
)
from .loo import (
    FitFailureError,
    LooRecord,
    RefitPolicy,
    ZeroSigmaError,
    bordered_loo,
    loo_msp,
    msp,
)

__all__ = [
    'ComparisonReport',
    'FitFailureError',
    'KrigingConfig',
    'KrigingMethod',
    'LooRecord',
    'PipelineStageError',
    'RefitPolicy',
    'SplineConfig',
    'SplineMethod',
    'TrendConfig',
    'Winner',
    'ZeroSigmaError',
    'bordered_loo',
    'compare_methods',
    'compare_predictors',
    'decide_winner',
    'estimate_covariogram',
    'loo_msp',
    'msp',
]
