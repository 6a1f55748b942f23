"""
Empirical semivariogram estimation and Gaussian covariogram fitting.
"""

from .estimator import EmpiricalVariogram, NoPairsError, empirical_semivariogram
from .models import (
    PARAMETRIZATION,
    DegenerateVariogramError,
    GaussianCovariogram,
    InsufficientLagsError,
    covariogram_value,
    fit_gaussian_wls,
    multistart_grid,
    semivariogram_value,
    wls_objective,
)

__all__ = [
    'PARAMETRIZATION',
    'DegenerateVariogramError',
    'EmpiricalVariogram',
    'GaussianCovariogram',
    'InsufficientLagsError',
    'NoPairsError',
    'covariogram_value',
    'empirical_semivariogram',
    'fit_gaussian_wls',
    'multistart_grid',
    'semivariogram_value',
    'wls_objective',
]
