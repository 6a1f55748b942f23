"""
Thin-plate smoothing splines and smoothing-parameter selection.
"""

from .thin_plate import (
    AlphaSelection,
    CollinearSitesError,
    SmoothingSelectionError,
    ThinPlateCovariance,
    TpsFit,
    default_alpha_grid,
    fit_tps,
    fitted_values,
    gcv_score,
    influence_matrix,
    penalized_objective,
    predict_tps,
    predict_tps_many,
    roughness,
    select_alpha_gcv,
    tps_as_kriging_system,
    tps_kernel,
)

__all__ = [
    'AlphaSelection',
    'CollinearSitesError',
    'SmoothingSelectionError',
    'ThinPlateCovariance',
    'TpsFit',
    'default_alpha_grid',
    'fit_tps',
    'fitted_values',
    'gcv_score',
    'influence_matrix',
    'penalized_objective',
    'predict_tps',
    'predict_tps_many',
    'roughness',
    'select_alpha_gcv',
    'tps_as_kriging_system',
    'tps_kernel',
]
