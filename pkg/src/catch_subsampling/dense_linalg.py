import logging
from typing import Optional

import numpy as np
import scipy.linalg

from catch_subsampling.catch_types import InvalidInputError, PivotedQR, SingularSystemError

logger = logging.getLogger(__name__)

_SINGULAR_DIAGONAL_RTOL = 1e-14


def as_finite_matrix(a: np.ndarray, name: str = "matrix") -> np.ndarray:
    matrix = np.asarray(a, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] < 1 or matrix.shape[1] < 1:
        raise InvalidInputError(f"The {name} must be a nonempty 2D array, got shape {matrix.shape}")
    if not np.all(np.isfinite(matrix)):
        raise InvalidInputError(f"The {name} has non-finite entries")
    return matrix


def numerical_rank(a: np.ndarray, rtol: Optional[float] = None) -> int:
    """Counts the singular values above rtol * sigma_max.

    The default rtol is max(rows, cols) * eps, the usual convention of `rank` in numerical environments.
    """
    matrix = as_finite_matrix(a)
    if rtol is None:
        rtol = max(matrix.shape) * np.finfo(float).eps
    singular_values = scipy.linalg.svdvals(matrix)
    if singular_values[0] == 0.0:
        return 0
    return int(np.count_nonzero(singular_values > rtol * singular_values[0]))


def pivoted_qr(a: np.ndarray) -> PivotedQR:
    """Householder QR with column pivoting, a[:, perm] = q @ r.

    Each step moves the remaining column of largest residual norm to the front, ties going to the lowest
    index. The diagonal of r is made nonnegative.
    """
    matrix = as_finite_matrix(a)
    q, r, perm = scipy.linalg.qr(matrix, mode="economic", pivoting=True)
    signs = np.where(np.diag(r) < 0, -1.0, 1.0)
    q = q * signs
    r = r * signs[:, np.newaxis]
    return PivotedQR(q=q, r=r, perm=perm)


def solve_upper_triangular(r: np.ndarray, rhs: np.ndarray, transposed: bool = False) -> np.ndarray:
    """Solves r x = rhs, or r^t x = rhs when `transposed`; rhs may hold several right-hand sides as columns."""
    matrix = as_finite_matrix(r, "triangular factor")
    if matrix.shape[0] != matrix.shape[1]:
        raise InvalidInputError(f"Triangular factor must be square, got shape {matrix.shape}")
    diagonal = np.abs(np.diag(matrix))
    if diagonal.max() == 0.0 or diagonal.min() <= _SINGULAR_DIAGONAL_RTOL * diagonal.max():
        raise SingularSystemError(
            f"Triangular factor is singular, diagonal ranges over [{diagonal.min():.3e}, {diagonal.max():.3e}]")
    return scipy.linalg.solve_triangular(
        np.triu(matrix), np.asarray(rhs, dtype=float), trans="T" if transposed else "N", lower=False)
