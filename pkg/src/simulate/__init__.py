"""
Seeded Gaussian random field simulation.
"""

from .field import (
    GENERATOR,
    FieldSpec,
    NotPositiveDefiniteError,
    covariance_square_root,
    random_sites,
    simulate_field,
)

__all__ = [
    'GENERATOR',
    'FieldSpec',
    'NotPositiveDefiniteError',
    'covariance_square_root',
    'random_sites',
    'simulate_field',
]
