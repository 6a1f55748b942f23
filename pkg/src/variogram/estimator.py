"""
Classic (Matheron) empirical semivariogram.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.spatial.distance import pdist

from src.geometry.sites import Observations
from src.utils.errors import InsufficientDataError, SpatialError

logger = logging.getLogger(__name__)

DEFAULT_BINS = 15
DEFAULT_MAX_LAG_FRACTION = 0.5


class NoPairsError(SpatialError):
    """Raised when no site pair lies within the maximum lag."""
    pass


@dataclass(frozen=True)
class EmpiricalVariogram:
    """
    Binned semivariogram estimate.

    Attributes:
        lag_centers: Midpoints of the occupied lag bins, strictly increasing
        gamma_hat: Semivariance estimate per bin
        pair_counts: Number of site pairs per bin
        max_lag: Upper edge of the last bin
    """
    lag_centers: np.ndarray
    gamma_hat: np.ndarray
    pair_counts: np.ndarray
    max_lag: float

    def __post_init__(self):
        lag_centers = np.array(self.lag_centers, dtype=float)
        gamma_hat = np.array(self.gamma_hat, dtype=float)
        pair_counts = np.array(self.pair_counts, dtype=int)
        if not (lag_centers.shape == gamma_hat.shape == pair_counts.shape):
            raise ValueError("Variogram arrays must have equal length")
        if np.any(np.diff(lag_centers) <= 0):
            raise ValueError("Lag centers must be strictly increasing")
        if np.any(pair_counts <= 0):
            raise ValueError("Empty lag bins must be omitted")
        for name, arr in (('lag_centers', lag_centers), ('gamma_hat', gamma_hat),
                          ('pair_counts', pair_counts)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_bins(self) -> int:
        return len(self.lag_centers)

    @property
    def variogram(self) -> np.ndarray:
        """The variogram 2 * gamma_hat."""
        return 2.0 * self.gamma_hat


def empirical_semivariogram(obs: Observations, n_bins: int = DEFAULT_BINS,
                            max_lag: Optional[float] = None) -> EmpiricalVariogram:
    """
    Estimate the semivariogram with the classic estimator.

    For each lag bin ``(edge_{k-1}, edge_k]`` over ``[0, max_lag]``::

        gamma_hat = sum((Z_i - Z_j)^2) / (2 * N(h))

    Args:
        obs: Observations, at least two
        n_bins: Number of equal-width lag bins
        max_lag: Largest lag considered; defaults to half the maximum pairwise distance

    Returns:
        EmpiricalVariogram with empty bins omitted

    Raises:
        NoPairsError: If no pair lies within ``max_lag``
    """
    if obs.n < 2:
        raise InsufficientDataError(f"Semivariogram needs at least 2 observations, got {obs.n}")
    if n_bins < 1:
        raise ValueError(f"n_bins must be at least 1, got {n_bins}")

    coords = obs.coords
    values = obs.values_array[:, None]
    distances = pdist(coords)
    squared_increments = pdist(values, metric='sqeuclidean')

    if max_lag is None:
        max_lag = DEFAULT_MAX_LAG_FRACTION * float(distances.max())
    if not max_lag > 0:
        raise NoPairsError(f"Maximum lag must be positive, got {max_lag}")

    edges = np.linspace(0.0, max_lag, n_bins + 1)
    in_range = (distances > 0) & (distances <= max_lag)
    if not np.any(in_range):
        raise NoPairsError(f"No site pair within max_lag={max_lag:g}")

    bins = np.digitize(distances[in_range], edges, right=True) - 1
    bins = np.clip(bins, 0, n_bins - 1)
    counts = np.bincount(bins, minlength=n_bins)
    sums = np.bincount(bins, weights=squared_increments[in_range], minlength=n_bins)

    occupied = counts > 0
    centers = 0.5 * (edges[:-1] + edges[1:])
    gamma_hat = sums[occupied] / (2.0 * counts[occupied])

    logger.debug(f"Empirical semivariogram: {int(occupied.sum())}/{n_bins} bins occupied, "
                 f"{int(counts.sum())} pairs, max_lag={max_lag:.6g}")
    return EmpiricalVariogram(
        lag_centers=centers[occupied],
        gamma_hat=gamma_hat,
        pair_counts=counts[occupied],
        max_lag=float(max_lag),
    )
