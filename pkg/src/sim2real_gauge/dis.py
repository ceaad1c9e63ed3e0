"""Domain invariance score: inverse dimension-normalized centroid gap.

Given conditioned embeddings in ``[0, 1]^{n x d*}`` and sim/real labels,
the score is ``max(0, 1 - ||mu_real - mu_sim|| / sqrt(d*))``.  For inputs
inside the unit box the clamp can never activate, because each centroid
lies in the box and the gap is therefore at most ``sqrt(d*)``.

Note on polarity: larger DIS means a smaller centroid gap, i.e. stronger
sim-real alignment.  All reporting in this package follows that
convention.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ingest import DomainLabels
from .linalg import as_matrix


class DisError(ValueError):
    """Invalid input for the domain invariance computation."""


@dataclass(frozen=True)
class DisResult:
    dis: float
    centroid_sim: np.ndarray
    centroid_real: np.ndarray
    raw_gap: float
    effective_dim: int
    n_sim: int
    n_real: int

    def __post_init__(self):
        if not 0.0 <= self.dis <= 1.0:
            raise DisError(f"dis must lie in [0, 1], got {self.dis}")
        if self.raw_gap < 0.0:
            raise DisError(f"raw_gap must be non-negative, got {self.raw_gap}")
        if min(self.n_sim, self.n_real) < 1:
            raise DisError("both domains must contribute at least one row")


def centroid(e_hat: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Arithmetic mean of the rows selected by a boolean mask."""
    e_hat = as_matrix(e_hat, "embeddings")
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != (e_hat.shape[0],):
        raise DisError(
            f"mask length {mask.shape} does not match {e_hat.shape[0]} rows"
        )
    if not mask.any():
        raise DisError("centroid of an empty row selection is undefined")
    return e_hat[mask].mean(axis=0)


def domain_invariance_score(
    e_hat: np.ndarray, d: DomainLabels, effective_dim: int
) -> DisResult:
    """Score conditioned embeddings against their domain labels.

    ``effective_dim`` is the projection dimension actually used and must
    equal the embedding width; it sets the ``sqrt(d*)`` normalizer.
    """
    e_hat = as_matrix(e_hat, "conditioned embeddings")
    if len(d) != e_hat.shape[0]:
        raise DisError(
            f"label count {len(d)} does not match {e_hat.shape[0]} rows"
        )
    if effective_dim != e_hat.shape[1]:
        raise DisError(
            f"effective_dim {effective_dim} does not match embedding width "
            f"{e_hat.shape[1]}"
        )
    if d.n_sim == 0 or d.n_real == 0:
        raise DisError("DIS requires both domains")

    mu_sim = centroid(e_hat, d.sim_mask)
    mu_real = centroid(e_hat, d.real_mask)
    raw_gap = float(np.linalg.norm(mu_real - mu_sim))
    score = max(0.0, 1.0 - raw_gap / math.sqrt(effective_dim))
    return DisResult(
        dis=score,
        centroid_sim=mu_sim,
        centroid_real=mu_real,
        raw_gap=raw_gap,
        effective_dim=effective_dim,
        n_sim=d.n_sim,
        n_real=d.n_real,
    )
