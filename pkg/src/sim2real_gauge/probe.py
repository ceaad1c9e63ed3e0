"""Linear action probe: minibatch SGD on mean squared error.

The probe is the affine map ``a_hat = W z + b`` trained from zero
initialization with plain SGD on the batch-mean squared error

    L(W, b) = (1/B) * sum_i ||a_i - W z_i - b||^2

whose exact gradients are ``grad_W = (2/B) (pred - A)^T Z`` and
``grad_b = (2/B) sum (pred - A)``.  Actions are z-scored on train-split
statistics before training so that the validation MSE, normalized per
element, lands in a unit scale and the action score ``max(0, 1 - MSE)``
behaves like a mean per-dimension R^2.

Everything is seeded: the split shuffle, the per-epoch batch order, and
nothing else draws randomness, so a fixed (data, config) pair yields a
bit-identical probe.
"""

from __future__ import annotations

import enum
import hashlib
import math
from dataclasses import dataclass

import numpy as np

from .ingest import DomainLabels
from .linalg import as_matrix, as_vector

# Action dimensions whose train-split std falls below this are mapped to
# zero instead of divided.
ACTION_STD_FLOOR = 1e-12

_SEED_MASK = (1 << 64) - 1


class ProbeError(ValueError):
    """Invalid configuration or input for probe training."""


class TrainingDivergedError(RuntimeError):
    """Raised when the train MSE stops being finite."""


class DomainFilter(enum.Enum):
    ALL = "all"
    SIM_ONLY = "sim"
    REAL_ONLY = "real"


@dataclass(frozen=True)
class ProbeConfig:
    epochs: int = 100
    batch_size: int = 256
    learning_rate: float = 0.5
    split_ratio: float = 0.8
    seed: int = 0
    domain_filter: DomainFilter = DomainFilter.ALL

    def __post_init__(self):
        if self.epochs < 1:
            raise ProbeError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ProbeError(f"batch_size must be >= 1, got {self.batch_size}")
        if not self.learning_rate > 0:
            raise ProbeError(f"learning_rate must be positive, got {self.learning_rate}")
        if not 0.0 < self.split_ratio < 1.0:
            raise ProbeError(
                f"split_ratio must lie strictly in (0, 1), got {self.split_ratio}"
            )


@dataclass(frozen=True)
class LinearProbe:
    """Affine readout ``a_hat = W z + b`` with W of shape (d_a, d_z)."""

    weights: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        if self.weights.ndim != 2 or self.bias.ndim != 1:
            raise ProbeError("weights must be 2-D and bias 1-D")
        if self.weights.shape[0] != self.bias.shape[0]:
            raise ProbeError(
                f"weights rows {self.weights.shape[0]} != bias length {self.bias.shape[0]}"
            )
        if not (np.isfinite(self.weights).all() and np.isfinite(self.bias).all()):
            raise ProbeError("probe parameters must be finite")


@dataclass(frozen=True)
class Split:
    train_indices: np.ndarray
    val_indices: np.ndarray

    def __post_init__(self):
        if self.train_indices.size < 1 or self.val_indices.size < 1:
            raise ProbeError("both split sides must be non-empty")
        if np.intersect1d(self.train_indices, self.val_indices).size > 0:
            raise ProbeError("train and validation indices overlap")


@dataclass(frozen=True)
class ActionNormStats:
    mean: np.ndarray
    std: np.ndarray


@dataclass(frozen=True)
class AsResult:
    action_score: float
    val_mse: float
    train_mse_curve: tuple[float, ...]
    action_norm_stats: ActionNormStats | None

    def __post_init__(self):
        if not 0.0 <= self.action_score <= 1.0:
            raise ProbeError(f"action_score must lie in [0, 1], got {self.action_score}")
        if self.val_mse < 0.0:
            raise ProbeError(f"val_mse must be non-negative, got {self.val_mse}")


def derive_seed(seed: int, encoder_id: str) -> int:
    """Stable per-encoder seed: base seed XOR a hash of the encoder id.

    Uses sha256 rather than the interpreter's salted string hash so the
    derivation is identical across processes and runs.
    """
    digest = hashlib.sha256(encoder_id.encode("utf-8")).digest()
    return (seed ^ int.from_bytes(digest[:8], "little")) & _SEED_MASK


def _rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.default_rng([seed & _SEED_MASK, stream])


def split_dataset(n: int, cfg: ProbeConfig, domains: DomainLabels) -> Split:
    """Seeded shuffle of the domain-filtered rows into train and val.

    The first ``ceil(split_ratio * n_filtered)`` shuffled rows train, the
    remainder validate.  Deterministic for a fixed seed.
    """
    if n != len(domains):
        raise ProbeError(f"n = {n} does not match {len(domains)} domain labels")
    if cfg.domain_filter is DomainFilter.ALL:
        indices = np.arange(n)
    elif cfg.domain_filter is DomainFilter.SIM_ONLY:
        indices = np.flatnonzero(domains.sim_mask)
    else:
        indices = np.flatnonzero(domains.real_mask)
    if indices.size < 2:
        raise ProbeError(
            f"domain filter {cfg.domain_filter.value!r} leaves {indices.size} rows; "
            "need at least 2"
        )
    shuffled = _rng(cfg.seed, 0).permutation(indices)
    n_train = math.ceil(cfg.split_ratio * shuffled.size)
    if n_train >= shuffled.size:
        raise ProbeError(
            f"split_ratio {cfg.split_ratio} leaves no validation rows out of "
            f"{shuffled.size}"
        )
    return Split(train_indices=shuffled[:n_train], val_indices=shuffled[n_train:])


def standardize_actions(
    a: np.ndarray, train: np.ndarray
) -> tuple[np.ndarray, ActionNormStats]:
    """Z-score every action dimension using train-split statistics.

    Dimensions whose train std is below ``ACTION_STD_FLOOR`` are mapped to
    zero for all rows.  The transform is applied to the full matrix.
    """
    a = as_matrix(a, "actions")
    train = np.asarray(train, dtype=np.intp)
    if train.size == 0:
        raise ProbeError("train index list is empty")
    mean = a[train].mean(axis=0)
    std = a[train].std(axis=0)
    safe = np.where(std >= ACTION_STD_FLOOR, std, 1.0)
    out = (a - mean) / safe
    out[:, std < ACTION_STD_FLOOR] = 0.0
    return out, ActionNormStats(mean=mean, std=std)


def probe_predict(p: LinearProbe, z: np.ndarray) -> np.ndarray:
    """Evaluate ``W z + b`` for one embedding vector."""
    z = as_vector(z, "embedding")
    if z.shape[0] != p.weights.shape[1]:
        raise ProbeError(
            f"embedding length {z.shape[0]} does not match probe input width "
            f"{p.weights.shape[1]}"
        )
    return p.weights @ z + p.bias


def probe_gradient(
    p: LinearProbe, z: np.ndarray, a: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Analytic gradients of the batch-mean squared error at ``p``."""
    z = as_matrix(z, "batch embeddings")
    a = as_matrix(a, "batch actions")
    if z.shape[0] == 0:
        raise ProbeError("gradient of an empty batch is undefined")
    if z.shape[0] != a.shape[0]:
        raise ProbeError(f"batch sizes differ: {z.shape[0]} vs {a.shape[0]}")
    residual = z @ p.weights.T + p.bias - a
    scale = 2.0 / z.shape[0]
    return scale * residual.T @ z, scale * residual.sum(axis=0)


def train_probe(
    z: np.ndarray, a: np.ndarray, split: Split, cfg: ProbeConfig
) -> tuple[LinearProbe, tuple[float, ...]]:
    """Run the SGD loop and return the probe plus its per-epoch train MSE.

    Parameters start at zero.  Each epoch reshuffles the train rows with
    the config seed and walks them in minibatches of ``cfg.batch_size``
    (final partial batch included, its gradient scaled by its true size).
    The recorded curve is the running train MSE per element, i.e. divided
    by both the row count and the action width, so it is directly
    comparable to the validation MSE.
    """
    z = as_matrix(z, "embeddings")
    a = as_matrix(a, "actions")
    if z.shape[0] != a.shape[0]:
        raise ProbeError(f"row counts differ: {z.shape[0]} vs {a.shape[0]}")
    d_z, d_a = z.shape[1], a.shape[1]
    weights = np.zeros((d_a, d_z))
    bias = np.zeros(d_a)

    train_idx = split.train_indices
    rng = _rng(cfg.seed, 1)
    curve = []
    for _ in range(cfg.epochs):
        order = rng.permutation(train_idx)
        squared_error = 0.0
        for start in range(0, order.size, cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            zb = z[batch]
            ab = a[batch]
            residual = zb @ weights.T + bias - ab
            squared_error += float((residual * residual).sum())
            scale = 2.0 / batch.size
            weights -= cfg.learning_rate * scale * (residual.T @ zb)
            bias -= cfg.learning_rate * scale * residual.sum(axis=0)
        epoch_mse = squared_error / (order.size * d_a)
        if not math.isfinite(epoch_mse):
            raise TrainingDivergedError(
                f"train MSE became non-finite at learning_rate "
                f"{cfg.learning_rate}; retry with a smaller learning rate"
            )
        curve.append(epoch_mse)

    return LinearProbe(weights=weights, bias=bias), tuple(curve)


def action_score(
    p: LinearProbe,
    z: np.ndarray,
    a: np.ndarray,
    val: np.ndarray,
    *,
    train_mse_curve: tuple[float, ...] = (),
    action_norm_stats: ActionNormStats | None = None,
) -> AsResult:
    """Validation MSE per element and its clamped complement.

    ``a`` must be standardized with the same statistics used in training.
    """
    z = as_matrix(z, "embeddings")
    a = as_matrix(a, "actions")
    val = np.asarray(val, dtype=np.intp)
    if val.size == 0:
        raise ProbeError("validation index list is empty")
    residual = z[val] @ p.weights.T + p.bias - a[val]
    val_mse = float((residual * residual).sum()) / (val.size * a.shape[1])
    return AsResult(
        action_score=max(0.0, 1.0 - val_mse),
        val_mse=val_mse,
        train_mse_curve=train_mse_curve,
        action_norm_stats=action_norm_stats,
    )


def evaluate_action_score(
    z: np.ndarray, a: np.ndarray, domains: DomainLabels, cfg: ProbeConfig
) -> AsResult:
    """Full probe pipeline: split, standardize actions, train, score."""
    z = as_matrix(z, "embeddings")
    split = split_dataset(z.shape[0], cfg, domains)
    standardized, stats = standardize_actions(a, split.train_indices)
    probe, curve = train_probe(z, standardized, split, cfg)
    return action_score(
        probe,
        z,
        standardized,
        split.val_indices,
        train_mse_curve=curve,
        action_norm_stats=stats,
    )
