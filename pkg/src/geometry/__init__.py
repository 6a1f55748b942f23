"""
Planar sites, observations and prediction grids.
"""

from .sites import (
    DuplicateSiteError,
    Grid,
    InvalidGridError,
    InvalidSiteError,
    Observations,
    Site,
    distance,
    grid_sites,
    pairwise_distances,
    site_coords,
)

__all__ = [
    'DuplicateSiteError',
    'Grid',
    'InvalidGridError',
    'InvalidSiteError',
    'Observations',
    'Site',
    'distance',
    'grid_sites',
    'pairwise_distances',
    'site_coords',
]
