"""Seeded synthetic encoder datasets with controlled gap and signal.

Single datasets follow a Gaussian linear model: sim embeddings are
standard normal, real embeddings get a mean offset of ``domain_shift``
along one fixed unit direction, and actions are a fixed well-conditioned
linear readout of the leading ``signal_fraction`` of embedding dims plus
Gaussian noise.  Both score expectations have closed forms under this
model, which is what the test oracles lean on.

The 23-dataset suite written by :func:`generate_suite` shares one action
matrix and one label vector across all encoders (the manifest schema has
a single ``actions_path``/``domains_path``), so suite embeddings are
built in the reverse direction: the shared actions are drawn first and
each encoder's signal dims are a mixed, noisy image of them.  Eleven
suite encoders grade the domain shift 0.0 to 1.0 in steps of 0.1 at fixed
signal content; the other twelve grade signal dimensionality up and
signal noise down so the action score rises along the family.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .ingest import DomainLabels, EncoderDataset, write_npy
from .probe import derive_seed
from .registry import (
    Architecture,
    EncoderMeta,
    Pretraining,
    TrainingType,
    dump_catalog,
)

_SEED_MASK = (1 << 64) - 1

SHIFT_FAMILY_IDS = tuple(f"shift-{i:02d}" for i in range(11))
SIGNAL_FAMILY_IDS = tuple(f"signal-{j:02d}" for j in range(12))


class SynthError(ValueError):
    """Invalid synthetic dataset specification."""


@dataclass(frozen=True)
class SynthSpec:
    n_per_domain: int
    dim: int
    action_dim: int
    domain_shift: float = 0.0
    signal_fraction: float = 1.0
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.n_per_domain < 1:
            raise SynthError(f"n_per_domain must be >= 1, got {self.n_per_domain}")
        if self.dim < 1 or self.action_dim < 1:
            raise SynthError("dim and action_dim must be >= 1")
        if self.domain_shift < 0:
            raise SynthError(f"domain_shift must be >= 0, got {self.domain_shift}")
        if not 0.0 <= self.signal_fraction <= 1.0:
            raise SynthError(
                f"signal_fraction must lie in [0, 1], got {self.signal_fraction}"
            )
        if self.noise_sigma < 0:
            raise SynthError(f"noise_sigma must be >= 0, got {self.noise_sigma}")


def _unit_direction(rng: np.random.Generator, dim: int) -> np.ndarray:
    u = rng.standard_normal(dim)
    return u / np.linalg.norm(u)


def _mixing_matrix(rng: np.random.Generator, d_a: int, k: int) -> np.ndarray:
    """Fixed well-conditioned readout, rows scaled to unit norm."""
    m = rng.standard_normal((d_a, k))
    return m / np.linalg.norm(m, axis=1, keepdims=True)


def generate(spec: SynthSpec, encoder_id: str = "synthetic") -> EncoderDataset:
    """Draw one dataset; deterministic for a fixed spec."""
    rng = np.random.default_rng(spec.seed & _SEED_MASK)
    n, d = spec.n_per_domain, spec.dim
    u = _unit_direction(rng, d)
    k = round(spec.signal_fraction * d)
    mixing = _mixing_matrix(rng, spec.action_dim, k) if k > 0 else None

    sim = rng.standard_normal((n, d))
    real = rng.standard_normal((n, d)) + spec.domain_shift * u
    embeddings = np.vstack([sim, real])
    labels = DomainLabels(is_real=np.repeat([False, True], n))

    actions = spec.noise_sigma * rng.standard_normal((2 * n, spec.action_dim))
    if mixing is not None:
        actions += embeddings[:, :k] @ mixing.T

    return EncoderDataset(
        encoder_id=encoder_id,
        embeddings=embeddings,
        domains=labels,
        actions=actions,
    )


def _signal_block(
    rng: np.random.Generator, actions: np.ndarray, k: int, sigma: float
) -> np.ndarray:
    """Isotropic k-dim Gaussian block carrying the actions linearly.

    The actions occupy min(k, d_a) directions of a random orthonormal
    basis; latent unit-variance coordinates fill the rest, so row norms
    behave like any other standard Gaussian embedding and L2 row
    normalization stays benign.  ``sigma`` adds measurement noise on top.
    """
    n, d_a = actions.shape
    if k >= d_a:
        q, _ = np.linalg.qr(rng.standard_normal((k, k)))
        latent = rng.standard_normal((n, k - d_a))
        block = actions @ q[:, :d_a].T + latent @ q[:, d_a:].T
    else:
        q, _ = np.linalg.qr(rng.standard_normal((d_a, k)))
        block = actions @ q
    if sigma > 0:
        block = block + sigma * rng.standard_normal((n, k))
    return block


def _suite_plan(dim: int) -> list[dict]:
    plan = []
    for i, encoder_id in enumerate(SHIFT_FAMILY_IDS):
        plan.append(
            {
                "encoder_id": encoder_id,
                "domain_shift": i / 10.0,
                "signal_fraction": 0.75,
                "signal_sigma": 0.1,
            }
        )
    for j, encoder_id in enumerate(SIGNAL_FAMILY_IDS):
        # Noise fades as signal content grows; the last entry is exactly
        # noiseless so its actions are fully linear in the embeddings.
        if j == 0:
            sigma = 1.0
        elif j == len(SIGNAL_FAMILY_IDS) - 1:
            sigma = 0.0
        else:
            sigma = 2.0 * (0.1 / 2.0) ** ((j - 1) / 9.0)
        plan.append(
            {
                "encoder_id": encoder_id,
                "domain_shift": 0.25,
                "signal_fraction": j / 11.0,
                "signal_sigma": sigma,
            }
        )
    return plan


def _suite_meta(index: int, encoder_id: str, dim: int) -> EncoderMeta:
    return EncoderMeta(
        encoder_id=encoder_id,
        display_name=encoder_id,
        architecture=Architecture.CNN if index % 2 == 0 else Architecture.TRANSFORMER,
        embedding_dim=dim,
        parameters_millions=round(5.0 * 1.22**index, 3),
        training_type=(
            TrainingType.SUPERVISED if index % 3 == 0 else TrainingType.SELF_SUPERVISED
        ),
        pretraining=(
            Pretraining.MANIPULATION if index % 2 == 0 else Pretraining.GENERAL
        ),
        catalog_index=index + 1,
        pretraining_detail="synthetic",
    )


def generate_suite(
    out_dir: str | Path,
    seed: int = 0,
    n_per_domain: int = 2000,
    dim: int = 24,
    action_dim: int = 4,
) -> Path:
    """Write the graded 23-encoder suite plus its manifest and catalog.

    Returns the manifest path.  Layout under ``out_dir``:
    ``manifest.json``, ``catalog.json``, ``domains.npy``, ``actions.npy``
    and one ``embeddings/<id>.npy`` per encoder.
    """
    if dim < action_dim:
        raise SynthError(f"dim {dim} must be >= action_dim {action_dim}")
    out = Path(out_dir)
    (out / "embeddings").mkdir(parents=True, exist_ok=True)

    n_total = 2 * n_per_domain
    root_rng = np.random.default_rng(seed & _SEED_MASK)
    actions = root_rng.standard_normal((n_total, action_dim))
    labels = DomainLabels(is_real=np.repeat([False, True], n_per_domain))

    write_npy(actions, out / "actions.npy")
    write_npy(labels.to_floats(), out / "domains.npy")

    plan = _suite_plan(dim)
    entries = []
    metas = []
    for index, item in enumerate(plan):
        encoder_id = item["encoder_id"]
        rng = np.random.default_rng(derive_seed(seed, encoder_id))
        k = round(item["signal_fraction"] * dim)

        embeddings = np.empty((n_total, dim))
        if k > 0:
            embeddings[:, :k] = _signal_block(rng, actions, k, item["signal_sigma"])
        embeddings[:, k:] = rng.standard_normal((n_total, dim - k))
        u = _unit_direction(rng, dim)
        embeddings[n_per_domain:] += item["domain_shift"] * u

        rel_path = f"embeddings/{encoder_id}.npy"
        write_npy(embeddings, out / rel_path)
        entries.append(
            {
                "encoder_id": encoder_id,
                "embeddings_path": rel_path,
                "declared_dim": dim,
            }
        )
        metas.append(_suite_meta(index, encoder_id, dim))

    manifest_doc = {
        "dataset_name": f"synthetic-suite-seed{seed}",
        "image_height": 240,
        "image_width": 320,
        "channels": 3,
        "domains_path": "domains.npy",
        "actions_path": "actions.npy",
        "encoders": entries,
    }
    manifest_path = out / "manifest.json"
    manifest_path.write_text(json.dumps(manifest_doc, indent=2) + "\n", encoding="utf-8")
    dump_catalog(tuple(metas), out / "catalog.json")
    return manifest_path
