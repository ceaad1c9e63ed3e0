"""Minimal dense linear-algebra kernel.

Matrices are plain two-dimensional ``float64`` numpy arrays in row-major
(C) order with finite entries.  :func:`as_matrix` is the single validation
gate; every public operation routes its inputs through it.

The symmetric eigensolver is a cyclic Jacobi iteration, chosen for its
accuracy on the small covariance matrices this engine produces.  It stops
once the off-diagonal Frobenius norm drops below ``JACOBI_OFF_THRESHOLD``
or after ``JACOBI_MAX_SWEEPS`` full sweeps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Convergence controls for the cyclic Jacobi iteration.
JACOBI_OFF_THRESHOLD = 1e-10
JACOBI_MAX_SWEEPS = 100

# Maximum tolerated |S - S^T| entry for the symmetric eigensolver.
SYMMETRY_TOLERANCE = 1e-9


class LinalgError(ValueError):
    """Raised for shape and validity violations in kernel operations."""


def as_matrix(x, name: str = "matrix") -> np.ndarray:
    """Coerce ``x`` to a validated 2-D float64 C-order array.

    Rejects non-2-D input and any non-finite entry.
    """
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 2:
        raise LinalgError(f"{name} must be 2-D, got {arr.ndim}-D shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise LinalgError(f"{name} contains non-finite entries (NaN or Inf)")
    return np.ascontiguousarray(arr)


def as_vector(x, name: str = "vector") -> np.ndarray:
    """Coerce ``x`` to a validated 1-D float64 array."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise LinalgError(f"{name} must be 1-D, got {arr.ndim}-D shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise LinalgError(f"{name} contains non-finite entries (NaN or Inf)")
    return arr


@dataclass(frozen=True)
class ColumnStats:
    """Per-column mean and population standard deviation."""

    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        if self.mean.shape != self.std.shape:
            raise LinalgError(
                f"mean/std length mismatch: {self.mean.shape} vs {self.std.shape}"
            )
        if (self.std < 0).any():
            raise LinalgError("standard deviations must be non-negative")


@dataclass(frozen=True)
class EigenDecomposition:
    """Full spectrum of a symmetric matrix, eigenvalues sorted descending.

    ``vectors[:, k]`` is the unit-norm eigenvector for ``values[k]``; in
    each eigenvector the entry of largest absolute value is positive, so
    the decomposition is reproducible byte-for-byte.
    """

    values: np.ndarray
    vectors: np.ndarray

    def __post_init__(self):
        if np.any(np.diff(self.values) > 0):
            raise LinalgError("eigenvalues must be sorted non-increasing")


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product with an explicit shape check."""
    a = as_matrix(a, "left operand")
    b = as_matrix(b, "right operand")
    if a.shape[1] != b.shape[0]:
        raise LinalgError(
            f"matmul dimension mismatch: {a.shape[0]}x{a.shape[1]} times "
            f"{b.shape[0]}x{b.shape[1]}"
        )
    return a @ b


def column_stats(x: np.ndarray) -> ColumnStats:
    """Arithmetic mean and population standard deviation of each column.

    Population convention (divide by n), matching the zero-mean
    unit-variance standardization used downstream.
    """
    x = as_matrix(x, "input")
    if x.shape[0] < 1:
        raise LinalgError("column_stats requires at least one row")
    return ColumnStats(mean=x.mean(axis=0), std=x.std(axis=0))


def _jacobi_rotate(a: np.ndarray, v: np.ndarray, p: int, q: int) -> None:
    """Annihilate a[p, q] with a Givens rotation, updating a and v in place."""
    apq = a[p, q]
    app = a[p, p]
    aqq = a[q, q]
    theta = (aqq - app) / (2.0 * apq)
    # Smaller-angle root of t^2 + 2*theta*t - 1 = 0, numerically stable form.
    t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(1.0, theta))
    c = 1.0 / math.sqrt(1.0 + t * t)
    s = t * c

    row_p = a[p, :].copy()
    row_q = a[q, :].copy()
    a[p, :] = c * row_p - s * row_q
    a[q, :] = s * row_p + c * row_q
    col_p = a[:, p].copy()
    col_q = a[:, q].copy()
    a[:, p] = c * col_p - s * col_q
    a[:, q] = s * col_p + c * col_q
    # Closed-form diagonal and pivot entries avoid rounding residue.
    a[p, p] = app - t * apq
    a[q, q] = aqq + t * apq
    a[p, q] = 0.0
    a[q, p] = 0.0

    v_p = v[:, p].copy()
    v[:, p] = c * v_p - s * v[:, q]
    v[:, q] = s * v_p + c * v[:, q]


def _off_diagonal_norm(a: np.ndarray) -> float:
    off = a - np.diag(np.diag(a))
    return float(np.sqrt((off * off).sum()))


def sym_eigen_descending(s: np.ndarray) -> EigenDecomposition:
    """Eigendecomposition of a symmetric matrix via cyclic Jacobi sweeps.

    Returns the full spectrum sorted descending with a deterministic sign
    convention: in each eigenvector the entry of largest absolute value
    (first such entry on ties) is made positive.
    """
    s = as_matrix(s, "input")
    n, m = s.shape
    if n != m:
        raise LinalgError(f"eigendecomposition requires a square matrix, got {n}x{m}")
    if n > 0 and np.abs(s - s.T).max() > SYMMETRY_TOLERANCE:
        raise LinalgError(
            f"matrix is not symmetric within {SYMMETRY_TOLERANCE:g}: "
            f"max |S - S^T| = {np.abs(s - s.T).max():.3e}"
        )

    a = (s + s.T) / 2.0
    v = np.eye(n)
    for _ in range(JACOBI_MAX_SWEEPS):
        if _off_diagonal_norm(a) < JACOBI_OFF_THRESHOLD:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if a[p, q] != 0.0:
                    _jacobi_rotate(a, v, p, q)

    values = np.diag(a).copy()
    order = np.argsort(-values, kind="stable")
    values = values[order]
    vectors = v[:, order]
    for k in range(n):
        col = vectors[:, k]
        if col[np.argmax(np.abs(col))] < 0:
            vectors[:, k] = -col
    return EigenDecomposition(values=values, vectors=vectors)
