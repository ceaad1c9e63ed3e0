"""Embedding conditioning: L2 rows, standardize, PCA, per-feature min-max.

The full chain maps a raw ``n x d`` embedding matrix into ``[0, 1]^{n x d*}``
so that centroid distances are comparable across encoders with different
native dimensions.  The PCA basis comes from a covariance
eigendecomposition in :mod:`sim2real_gauge.linalg`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import as_matrix, column_stats, sym_eigen_descending

# Features whose population std falls below this are treated as constant
# and standardized to all-zeros instead of divided.
STD_FLOOR = 1e-12

DEFAULT_TARGET_DIM = 50
DEFAULT_EPSILON = 1e-12


class PreprocessError(ValueError):
    """Invalid configuration or input for the conditioning pipeline."""


@dataclass(frozen=True)
class PcaConfig:
    """Shared projection dimension and the min-max denominator floor."""

    target_dim: int = DEFAULT_TARGET_DIM
    epsilon: float = DEFAULT_EPSILON

    def __post_init__(self):
        if self.target_dim < 1:
            raise PreprocessError(f"target_dim must be >= 1, got {self.target_dim}")
        if not self.epsilon > 0:
            raise PreprocessError(f"epsilon must be positive, got {self.epsilon}")


@dataclass(frozen=True)
class PcaModel:
    """Fitted standardize-then-project transform.

    ``components`` holds one orthonormal basis vector per column;
    ``explained_variance`` is the matching descending eigenvalue slice of
    the standardized covariance.
    """

    mean: np.ndarray
    std: np.ndarray
    components: np.ndarray
    explained_variance: np.ndarray

    def standardize(self, x: np.ndarray) -> np.ndarray:
        x = as_matrix(x, "input")
        safe = np.where(self.std >= STD_FLOOR, self.std, 1.0)
        out = (x - self.mean) / safe
        out[:, self.std < STD_FLOOR] = 0.0
        return out

    def transform(self, x: np.ndarray) -> np.ndarray:
        return self.standardize(x) @ self.components


def l2_normalize_rows(e: np.ndarray) -> np.ndarray:
    """Scale each row to unit Euclidean norm; all-zero rows pass through."""
    e = as_matrix(e, "embeddings")
    norms = np.sqrt((e * e).sum(axis=1, keepdims=True))
    return e / np.where(norms > 0.0, norms, 1.0)


def _fix_sign(v: np.ndarray) -> np.ndarray:
    """Largest-magnitude entry positive, same rule as the eigensolver."""
    return -v if v[np.argmax(np.abs(v))] < 0 else v


def _complete_basis(columns: list[np.ndarray], d: int, needed: int) -> None:
    """Append deterministic orthonormal directions from the canonical basis.

    Used for principal directions whose eigenvalue is numerically zero:
    any orthonormal completion works because the data has no variance
    there, but a reproducible one keeps output bytes stable.
    """
    for j in range(d):
        if needed == 0:
            return
        r = np.zeros(d)
        r[j] = 1.0
        for col in columns:
            r -= (col @ r) * col
        norm = np.linalg.norm(r)
        if norm > 1e-6:
            columns.append(_fix_sign(r / norm))
            needed -= 1


def _principal_directions(standardized: np.ndarray, d_star: int):
    """Top eigenpairs of the covariance of pre-centered data.

    For d <= n the covariance is eigendecomposed directly.  For wide data
    (d > n) the same spectrum comes from the n x n Gram matrix, and each
    covariance eigenvector is recovered as X^T u / sqrt(n lambda); this
    keeps the Jacobi problem at min(n, d) x min(n, d).  Directions with
    numerically zero variance are completed deterministically.
    """
    n, d = standardized.shape
    if d <= n:
        covariance = (standardized.T @ standardized) / n
        covariance = (covariance + covariance.T) / 2.0
        eigen = sym_eigen_descending(covariance)
        return (
            eigen.vectors[:, :d_star].copy(),
            np.maximum(eigen.values[:d_star], 0.0),
        )

    gram = (standardized @ standardized.T) / n
    gram = (gram + gram.T) / 2.0
    eigen = sym_eigen_descending(gram)
    tol = 1e-10 * max(eigen.values[0], 0.0)
    columns: list[np.ndarray] = []
    explained = []
    for k in range(d_star):
        lam = eigen.values[k]
        if lam <= tol:
            break
        v = standardized.T @ eigen.vectors[:, k] / np.sqrt(n * lam)
        columns.append(_fix_sign(v / np.linalg.norm(v)))
        explained.append(lam)
    _complete_basis(columns, d, d_star - len(columns))
    explained.extend([0.0] * (d_star - len(explained)))
    return np.stack(columns, axis=1), np.asarray(explained)


def fit_standardize_pca(e: np.ndarray, cfg: PcaConfig) -> tuple[PcaModel, np.ndarray]:
    """Standardize features, then project onto the top principal directions.

    ``e`` must already contain the concatenation of both domains; the
    statistics and the basis are fitted jointly.  Features with population
    std below ``STD_FLOOR`` are mapped to zero rather than divided.

    Returns the fitted model and the projected ``n x target_dim`` matrix.
    """
    e = as_matrix(e, "embeddings")
    n, d = e.shape
    if n < 2:
        raise PreprocessError(f"PCA fit requires at least 2 rows, got {n}")
    if cfg.target_dim > min(n, d):
        raise PreprocessError(
            f"target_dim {cfg.target_dim} exceeds min(n, d) = {min(n, d)}"
        )

    stats = column_stats(e)
    safe = np.where(stats.std >= STD_FLOOR, stats.std, 1.0)
    standardized = (e - stats.mean) / safe
    standardized[:, stats.std < STD_FLOOR] = 0.0

    components, explained = _principal_directions(standardized, cfg.target_dim)
    model = PcaModel(
        mean=stats.mean,
        std=stats.std,
        components=components,
        explained_variance=explained,
    )
    return model, standardized @ components


def minmax_normalize(e_tilde: np.ndarray, epsilon: float = DEFAULT_EPSILON) -> np.ndarray:
    """Rescale each column into [0, 1] over all rows jointly.

    Degenerate columns (range below ``epsilon``) divide by the floor
    instead, collapsing to zero.
    """
    e_tilde = as_matrix(e_tilde, "projected embeddings")
    if not epsilon > 0:
        raise PreprocessError(f"epsilon must be positive, got {epsilon}")
    lo = e_tilde.min(axis=0)
    hi = e_tilde.max(axis=0)
    return (e_tilde - lo) / np.maximum(hi - lo, epsilon)
