"""
Seeded Gaussian random field simulation.

Values are ``trend(t) + L xi`` where ``L`` is the symmetric square root of
the covariance matrix and ``xi`` are standard normal draws from a PCG64
generator seeded by the caller, so identical inputs give identical output.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import eigh
from scipy.spatial.distance import pdist, squareform

from src.geometry.sites import Observations, Site, site_coords
from src.utils.errors import SpatialError
from src.variogram.models import GaussianCovariogram

logger = logging.getLogger(__name__)

GENERATOR = "numpy.PCG64"
MAX_SITES = 2000
JITTER_BUDGET = 1e-10
MAX_SEED = 2 ** 64


class NotPositiveDefiniteError(SpatialError):
    """Raised when the covariance matrix is indefinite beyond the jitter budget."""
    pass


@dataclass(frozen=True)
class FieldSpec:
    """
    Generating model of a simulated field.

    Attributes:
        model: Covariogram of the zero-mean part
        trend: Optional planar trend coefficients (b0, b1, b2)
        seed: Unsigned 64-bit seed
    """
    model: GaussianCovariogram
    trend: Optional[Tuple[float, float, float]] = None
    seed: int = 0

    def __post_init__(self):
        if not isinstance(self.seed, (int, np.integer)) or not 0 <= int(self.seed) < MAX_SEED:
            raise ValueError(f"Seed must be an unsigned 64-bit integer, got {self.seed!r}")
        if self.trend is not None:
            trend = tuple(float(v) for v in self.trend)
            if len(trend) != 3 or not all(np.isfinite(trend)):
                raise ValueError(f"Trend must be three finite coefficients, got {self.trend}")
            object.__setattr__(self, 'trend', trend)

    def as_dict(self) -> dict:
        return {
            'model': self.model.as_dict(),
            'trend': list(self.trend) if self.trend is not None else None,
            'seed': int(self.seed),
            'generator': GENERATOR,
        }


def covariance_square_root(covariance: np.ndarray, jitter_budget: float = JITTER_BUDGET) -> np.ndarray:
    """
    Symmetric square root of a covariance matrix.

    Eigenvalues slightly below zero (round-off) are set to zero as long as
    they lie within ``jitter_budget * c(0)``.

    Raises:
        NotPositiveDefiniteError: If an eigenvalue is more negative than the budget allows
    """
    eigenvalues, eigenvectors = eigh(covariance)
    scale = float(np.max(np.diag(covariance)))
    floor = -jitter_budget * scale
    if eigenvalues[0] < floor:
        raise NotPositiveDefiniteError(
            f"Covariance matrix has eigenvalue {eigenvalues[0]:.3e} below {floor:.3e}"
        )
    clipped = np.clip(eigenvalues, 0.0, None)
    if eigenvalues[0] < 0:
        logger.debug(f"Clipped {int(np.sum(eigenvalues < 0))} negative eigenvalues (min {eigenvalues[0]:.3e})")
    return (eigenvectors * np.sqrt(clipped)) @ eigenvectors.T


def random_sites(n: int, bounds: Tuple[float, float, float, float], seed: int) -> list:
    """Uniform random sites in ``(x_min, x_max, y_min, y_max)`` from a seeded PCG64 stream."""
    rng = np.random.Generator(np.random.PCG64(seed))
    x_min, x_max, y_min, y_max = bounds
    xs = rng.uniform(x_min, x_max, n)
    ys = rng.uniform(y_min, y_max, n)
    return [Site(float(x), float(y)) for x, y in zip(xs, ys)]


def simulate_field(spec: FieldSpec, sites: Sequence[Site]) -> Observations:
    """
    Draw one realization of the field at the given sites.

    Args:
        spec: Generating model, trend and seed
        sites: Distinct sites, at most 2000

    Returns:
        Observations of the simulated field

    Raises:
        NotPositiveDefiniteError: If the covariance cannot be factored within the jitter budget
    """
    n = len(sites)
    if n == 0:
        raise ValueError("Simulation needs at least one site")
    if n > MAX_SITES:
        raise ValueError(f"Dense simulation supports at most {MAX_SITES} sites, got {n}")

    coords = site_coords(sites)
    distances = squareform(pdist(coords)) if n > 1 else np.zeros((1, 1))
    covariance = spec.model.covariogram(distances)

    root = covariance_square_root(covariance)
    rng = np.random.Generator(np.random.PCG64(int(spec.seed)))
    values = root @ rng.standard_normal(n)

    if spec.trend is not None:
        b0, b1, b2 = spec.trend
        values = values + b0 + b1 * coords[:, 0] + b2 * coords[:, 1]

    logger.debug(f"Simulated {n} values with seed {spec.seed} ({GENERATOR})")
    return Observations(tuple(sites), tuple(values))
