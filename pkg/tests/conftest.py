"""Shared fixtures: tiny on-disk datasets in the interchange formats."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from sim2real_gauge.ingest import EncoderDataset, write_npy


def write_dataset_dir(
    out_dir: Path,
    datasets: list[EncoderDataset],
    dataset_name: str = "fixture",
) -> Path:
    """Write one manifest plus NPY files for datasets sharing rows/actions.

    The first dataset supplies the shared domains and actions files.
    Returns the manifest path.
    """
    out_dir.mkdir(parents=True, exist_ok=True)
    first = datasets[0]
    write_npy(first.domains.to_floats(), out_dir / "domains.npy")
    write_npy(first.actions, out_dir / "actions.npy")
    encoders = []
    for ds in datasets:
        rel = f"{ds.encoder_id}.npy"
        write_npy(ds.embeddings, out_dir / rel)
        encoders.append(
            {
                "encoder_id": ds.encoder_id,
                "embeddings_path": rel,
                "declared_dim": int(ds.embeddings.shape[1]),
            }
        )
    doc = {
        "dataset_name": dataset_name,
        "image_height": 240,
        "image_width": 320,
        "channels": 3,
        "domains_path": "domains.npy",
        "actions_path": "actions.npy",
        "encoders": encoders,
    }
    manifest_path = out_dir / "manifest.json"
    manifest_path.write_text(json.dumps(doc, indent=2), encoding="utf-8")
    return manifest_path


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)
