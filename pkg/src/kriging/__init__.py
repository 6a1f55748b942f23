"""
Ordinary and universal kriging, primal and dual forms.
"""

from .universal import (
    CovarianceModel,
    DriftBasis,
    DualKrigingFit,
    KrigingPrediction,
    KrigingSystem,
    RankDeficientDriftError,
    assemble_system,
    fit_dual,
    has_full_column_rank,
    predict_bordered,
    predict_dual,
    predict_dual_many,
    predict_primal,
)

__all__ = [
    'CovarianceModel',
    'DriftBasis',
    'DualKrigingFit',
    'KrigingPrediction',
    'KrigingSystem',
    'RankDeficientDriftError',
    'assemble_system',
    'fit_dual',
    'has_full_column_rank',
    'predict_bordered',
    'predict_dual',
    'predict_dual_many',
    'predict_primal',
]
