"""
Sites, observation sets, distances and prediction grids.

Coordinates are treated as planar Euclidean; every type here is immutable
after construction and can be shared freely.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, List, Sequence, Tuple

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist

logger = logging.getLogger(__name__)

DUPLICATE_TOLERANCE = 1e-12


class InvalidSiteError(ValueError):
    """Raised for non-finite coordinates or values."""
    pass


class DuplicateSiteError(ValueError):
    """Raised when two observation sites coincide."""
    pass


class InvalidGridError(ValueError):
    """Raised for an empty or inverted prediction grid."""
    pass


@dataclass(frozen=True)
class Site:
    """A location in the plane."""
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise InvalidSiteError(f"Site coordinates must be finite, got ({self.x}, {self.y})")


@dataclass(frozen=True)
class Observations:
    """
    Scalar observations at distinct sites.

    Attributes:
        sites: Observation sites, in input order
        values: Observed values, one per site
    """
    sites: Tuple[Site, ...]
    values: Tuple[float, ...]
    duplicate_tolerance: float = field(default=DUPLICATE_TOLERANCE, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, 'sites', tuple(self.sites))
        object.__setattr__(self, 'values', tuple(float(v) for v in self.values))

        if len(self.sites) == 0:
            raise ValueError("Observations require at least one site")
        if len(self.sites) != len(self.values):
            raise ValueError(
                f"Got {len(self.sites)} sites but {len(self.values)} values"
            )
        if not all(math.isfinite(v) for v in self.values):
            raise InvalidSiteError("Observation values must be finite")

        groups = _duplicate_groups(self.coords, self.duplicate_tolerance)
        if groups is not None:
            first = next(g for g in groups if len(g) > 1)
            raise DuplicateSiteError(
                f"Sites {first} coincide (distance < {self.duplicate_tolerance:g}); "
                f"use average_duplicates=True to merge them"
            )

    @classmethod
    def from_arrays(cls, coords: Sequence[Sequence[float]], values: Sequence[float],
                    average_duplicates: bool = False,
                    duplicate_tolerance: float = DUPLICATE_TOLERANCE) -> "Observations":
        """
        Build observations from coordinate and value arrays.

        Args:
            coords: (n, 2) array-like of x, y coordinates
            values: n observed values
            average_duplicates: Collapse coincident sites into one with the mean value
            duplicate_tolerance: Distance below which two sites are the same

        Returns:
            Observations instance

        Raises:
            DuplicateSiteError: If sites coincide and averaging is disabled
        """
        coords = np.asarray(coords, dtype=float).reshape(-1, 2)
        values = np.asarray(values, dtype=float).ravel()

        if average_duplicates and len(coords) == len(values) and len(coords) > 1:
            groups = _duplicate_groups(coords, duplicate_tolerance)
            if groups is not None:
                logger.info(f"Averaging {len(coords) - len(groups)} duplicate sites")
                coords = np.array([coords[g[0]] for g in groups])
                values = np.array([values[g].mean() for g in groups])

        sites = tuple(Site(float(x), float(y)) for x, y in coords)
        return cls(sites, tuple(values), duplicate_tolerance=duplicate_tolerance)

    @property
    def n(self) -> int:
        return len(self.sites)

    @property
    def coords(self) -> np.ndarray:
        """(n, 2) array of site coordinates."""
        return np.array([(s.x, s.y) for s in self.sites], dtype=float).reshape(-1, 2)

    @property
    def values_array(self) -> np.ndarray:
        return np.array(self.values, dtype=float)

    def without(self, index: int) -> "Observations":
        """Return a copy with observation ``index`` removed."""
        if not 0 <= index < self.n:
            raise IndexError(f"Observation index {index} out of range for n={self.n}")
        if self.n == 1:
            raise ValueError("Cannot remove the only observation")
        keep = [i for i in range(self.n) if i != index]
        return Observations(tuple(self.sites[i] for i in keep),
                            tuple(self.values[i] for i in keep),
                            duplicate_tolerance=self.duplicate_tolerance)

    def with_values(self, values: Iterable[float]) -> "Observations":
        """Return observations at the same sites carrying new values."""
        return Observations(self.sites, tuple(values), duplicate_tolerance=self.duplicate_tolerance)


def _duplicate_groups(coords: np.ndarray, tolerance: float):
    """Group indices of coincident sites; ``None`` when all sites are distinct."""
    if len(coords) < 2:
        return None
    pairs = cKDTree(coords).query_pairs(tolerance, output_type='ndarray')
    if len(pairs) == 0:
        return None
    n = len(coords)
    graph = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n))
    n_groups, labels = connected_components(graph, directed=False)
    groups: List[List[int]] = [[] for _ in range(n_groups)]
    for i, label in enumerate(labels):
        groups[label].append(i)
    groups.sort(key=lambda g: g[0])
    return groups


@dataclass(frozen=True)
class Grid:
    """Regular rectangular prediction grid, inclusive of its corners."""
    x_min: float
    x_max: float
    y_min: float
    y_max: float
    nx: int
    ny: int

    def __post_init__(self):
        bounds = (self.x_min, self.x_max, self.y_min, self.y_max)
        if not all(math.isfinite(v) for v in bounds):
            raise InvalidGridError(f"Grid bounds must be finite, got {bounds}")
        if self.nx < 1 or self.ny < 1:
            raise InvalidGridError(f"Grid needs nx >= 1 and ny >= 1, got {self.nx}x{self.ny}")
        # A single column or row may sit on a degenerate extent
        if self.x_min > self.x_max or (self.nx > 1 and self.x_min == self.x_max):
            raise InvalidGridError(f"Grid needs x_min < x_max, got {self.x_min}, {self.x_max}")
        if self.y_min > self.y_max or (self.ny > 1 and self.y_min == self.y_max):
            raise InvalidGridError(f"Grid needs y_min < y_max, got {self.y_min}, {self.y_max}")


def distance(a: Site, b: Site) -> float:
    """Euclidean distance between two sites."""
    return math.hypot(a.x - b.x, a.y - b.y)


def pairwise_distances(coords_a: np.ndarray, coords_b: np.ndarray) -> np.ndarray:
    """Euclidean distance matrix between two coordinate arrays."""
    return cdist(np.asarray(coords_a, dtype=float).reshape(-1, 2),
                 np.asarray(coords_b, dtype=float).reshape(-1, 2))


def site_coords(sites: Sequence[Site]) -> np.ndarray:
    """(m, 2) coordinate array for a sequence of sites."""
    return np.array([(s.x, s.y) for s in sites], dtype=float).reshape(-1, 2)


def grid_sites(g: Grid) -> List[Site]:
    """
    Enumerate grid nodes in row-major order (x varies fastest).

    Args:
        g: Prediction grid

    Returns:
        ``nx * ny`` sites from (x_min, y_min) to (x_max, y_max)
    """
    xs = np.linspace(g.x_min, g.x_max, g.nx) if g.nx > 1 else np.array([g.x_min])
    ys = np.linspace(g.y_min, g.y_max, g.ny) if g.ny > 1 else np.array([g.y_min])
    return [Site(float(x), float(y)) for y in ys for x in xs]
