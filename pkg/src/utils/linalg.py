"""
Dense factorizations shared by the kriging and spline solvers.

Both predictors reduce to the symmetric indefinite saddle-point matrix

    [[A,  X],
     [X', 0]]

where ``A`` is a (generalized) covariance matrix and ``X`` the drift design
matrix. The matrix is symmetrically equilibrated, factored once with LU and
partial pivoting, and gated on a LAPACK reciprocal-condition estimate.
"""

import logging
import warnings
from typing import Optional

import numpy as np
from scipy.linalg import LinAlgWarning, get_lapack_funcs, lu_factor, lu_solve

from .errors import IllConditionedError

logger = logging.getLogger(__name__)

RCOND_THRESHOLD = 1e-14


def kernel_scale(kernel: np.ndarray) -> float:
    """
    Typical magnitude of a kernel block, used to equilibrate it.

    Args:
        kernel: Square kernel matrix

    Returns:
        Mean absolute diagonal, or the largest absolute entry when the diagonal is zero
    """
    d = float(np.mean(np.abs(np.diag(kernel)))) if kernel.size else 0.0
    if d <= 0.0:
        d = float(np.max(np.abs(kernel))) if kernel.size else 0.0
    return d if d > 0.0 else 1.0


class EquilibratedLU:
    """
    LU factorization of ``D M D`` for a positive diagonal scaling ``D``.

    Solving ``M z = r`` is carried out as ``z = D (D M D)^{-1} D r``.
    """

    def __init__(self, matrix: np.ndarray, scale: Optional[np.ndarray] = None,
                 rcond_threshold: float = RCOND_THRESHOLD, label: str = "matrix"):
        """
        Factor a square matrix.

        Args:
            matrix: Square matrix to factor
            scale: Diagonal of ``D`` (defaults to ones)
            rcond_threshold: Smallest acceptable reciprocal condition estimate
            label: Name used in log and error messages

        Raises:
            IllConditionedError: If the reciprocal condition estimate is below the threshold
        """
        matrix = np.asarray(matrix, dtype=float)
        size = matrix.shape[0]
        self.scale = np.ones(size) if scale is None else np.asarray(scale, dtype=float)
        self.label = label

        scaled = matrix * self.scale[:, None] * self.scale[None, :]
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", LinAlgWarning)
            self._lu = lu_factor(scaled)

        gecon, = get_lapack_funcs(("gecon",), (self._lu[0],))
        anorm = float(np.abs(scaled).sum(axis=0).max()) if size else 0.0
        rcond, info = gecon(self._lu[0], anorm, norm='1')
        self.rcond = float(rcond) if info == 0 else 0.0
        logger.debug(f"Factored {label} of size {size}: rcond={self.rcond:.3e}")

        if not np.isfinite(self.rcond) or self.rcond < rcond_threshold:
            raise IllConditionedError(
                f"{label} is ill-conditioned (reciprocal condition {self.rcond:.3e} "
                f"< {rcond_threshold:.1e}); add a nugget or remove near-duplicate sites",
                rcond=self.rcond,
            )

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """
        Solve against one right-hand side vector or a matrix of them.

        Args:
            rhs: Array of shape (size,) or (size, k)

        Returns:
            Solution with the same shape as ``rhs``
        """
        rhs = np.asarray(rhs, dtype=float)
        s = self.scale if rhs.ndim == 1 else self.scale[:, None]
        return s * lu_solve(self._lu, s * rhs)


class BorderedSystem(EquilibratedLU):
    """Factorization of the saddle-point matrix ``[[A, X], [X', 0]]``."""

    def __init__(self, kernel: np.ndarray, design: np.ndarray,
                 rcond_threshold: float = RCOND_THRESHOLD, label: str = "bordered system"):
        """
        Assemble and factor the bordered matrix.

        Args:
            kernel: (n, n) covariance or generalized covariance matrix
            design: (n, m) drift design matrix
            rcond_threshold: Smallest acceptable reciprocal condition estimate
            label: Name used in log and error messages

        Raises:
            IllConditionedError: If the equilibrated matrix is numerically singular
        """
        kernel = np.asarray(kernel, dtype=float)
        design = np.asarray(design, dtype=float)
        n, m = design.shape
        self.n = n
        self.m = m

        matrix = np.zeros((n + m, n + m))
        matrix[:n, :n] = kernel
        matrix[:n, n:] = design
        matrix[n:, :n] = design.T

        d = kernel_scale(kernel)
        rms = np.sqrt(np.mean(design ** 2, axis=0))
        rms[rms == 0.0] = 1.0
        scale = np.concatenate([np.full(n, 1.0 / np.sqrt(d)), np.sqrt(d) / rms])

        super().__init__(matrix, scale=scale, rcond_threshold=rcond_threshold, label=label)

    def solve_blocks(self, top: np.ndarray, bottom: np.ndarray):
        """
        Solve ``[[A, X], [X', 0]] [u; v] = [top; bottom]``.

        Returns:
            Tuple ``(u, v)`` split at the kernel/drift boundary
        """
        solution = self.solve(np.concatenate([np.asarray(top, dtype=float),
                                              np.asarray(bottom, dtype=float)]))
        return solution[:self.n], solution[self.n:]

    def inverse(self) -> np.ndarray:
        """Full inverse of the bordered matrix (used by the fast leave-one-out path)."""
        return self.solve(np.eye(self.n + self.m))
