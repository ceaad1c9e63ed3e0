"""Frame fixtures shared across extractor tests."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest
from PIL import Image

FRAME_HEIGHT = 240
FRAME_WIDTH = 320


def write_frames(out_dir: Path, count: int, seed: int = 0) -> list[Path]:
    """Seeded random RGB frames at the dataset's native geometry."""
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    paths = []
    for i in range(count):
        pixels = rng.integers(0, 256, size=(FRAME_HEIGHT, FRAME_WIDTH, 3), dtype=np.uint8)
        path = out_dir / f"frame_{i:03d}.png"
        Image.fromarray(pixels).save(path)
        paths.append(path)
    return paths


def write_constant_frame(path: Path, value: int = 128) -> Path:
    pixels = np.full((FRAME_HEIGHT, FRAME_WIDTH, 3), value, dtype=np.uint8)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(pixels).save(path)
    return path


@pytest.fixture(scope="session")
def frames_dir(tmp_path_factory) -> Path:
    out = tmp_path_factory.mktemp("frames")
    write_frames(out, 8, seed=7)
    return out
