"""Batch embedding extraction into the NPY + manifest interchange format.

Frames are processed in lexicographic filename order, so externally
maintained domain-label and action files stay aligned with the embedding
rows.  The embeddings file is written with the numpy saver (NPY 1.0);
the manifest entry for the encoder is created or updated in place and
other entries are left untouched.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from PIL import Image

from .models import EncoderSpec, load_encoder

FRAME_SUFFIXES = {".png", ".jpg", ".jpeg"}

# ImageNet channel statistics, the convention all registered backbones
# were designed around.
CHANNEL_MEAN = (0.485, 0.456, 0.406)
CHANNEL_STD = (0.229, 0.224, 0.225)


class ExtractionError(RuntimeError):
    """Extraction could not produce a valid embeddings file."""


@dataclass(frozen=True)
class ExtractorConfig:
    encoder_id: str
    image_dir: Path
    manifest_path: Path
    embeddings_path: Path
    batch_size: int = 8
    image_size: int = 0  # 0 means the encoder's native input size
    device: str = "cpu"
    seed: int = 0
    pretrained: bool = False
    domains_path: str = "domains.npy"
    actions_path: str = "actions.npy"


@dataclass(frozen=True)
class ExtractionResult:
    encoder_id: str
    embeddings_path: Path
    n_frames: int
    embedding_dim: int


def list_frames(image_dir: Path) -> list[Path]:
    """Image files under ``image_dir``, ordered by filename."""
    frames = sorted(
        (p for p in Path(image_dir).iterdir() if p.suffix.lower() in FRAME_SUFFIXES),
        key=lambda p: p.name,
    )
    if not frames:
        raise ExtractionError(f"no image frames found in {image_dir}")
    return frames


def frame_to_tensor(path: Path, size: int) -> torch.Tensor:
    image = Image.open(path).convert("RGB").resize((size, size), Image.BILINEAR)
    array = np.asarray(image, dtype=np.float32) / 255.0
    tensor = torch.from_numpy(array).permute(2, 0, 1)
    mean = torch.tensor(CHANNEL_MEAN).view(3, 1, 1)
    std = torch.tensor(CHANNEL_STD).view(3, 1, 1)
    return (tensor - mean) / std


def _embed_frames(
    model: torch.nn.Module,
    spec: EncoderSpec,
    frames: list[Path],
    size: int,
    batch_size: int,
    device: str,
) -> np.ndarray:
    rows = []
    with torch.no_grad():
        for start in range(0, len(frames), batch_size):
            batch = torch.stack(
                [frame_to_tensor(p, size) for p in frames[start : start + batch_size]]
            ).to(device)
            out = model(batch)
            if out.ndim != 2:
                raise ExtractionError(
                    f"{spec.encoder_id!r} returned a {tuple(out.shape)} tensor; "
                    "expected one embedding vector per frame"
                )
            rows.append(out.cpu().numpy().astype(np.float32))
    return np.vstack(rows)


def _upsert_manifest(cfg: ExtractorConfig, n_frames: int, dim: int) -> None:
    manifest_path = Path(cfg.manifest_path)
    if manifest_path.exists():
        doc = json.loads(manifest_path.read_text(encoding="utf-8"))
    else:
        first = list_frames(cfg.image_dir)[0]
        with Image.open(first) as image:
            width, height = image.size
        doc = {
            "dataset_name": Path(cfg.image_dir).name,
            "image_height": height,
            "image_width": width,
            "channels": 3,
            "domains_path": cfg.domains_path,
            "actions_path": cfg.actions_path,
            "encoders": [],
        }
    try:
        rel = Path(cfg.embeddings_path).relative_to(manifest_path.parent)
        embeddings_ref = rel.as_posix()
    except ValueError:
        embeddings_ref = str(Path(cfg.embeddings_path))
    entry = {
        "encoder_id": cfg.encoder_id,
        "embeddings_path": embeddings_ref,
        "declared_dim": dim,
    }
    encoders = [e for e in doc["encoders"] if e["encoder_id"] != cfg.encoder_id]
    encoders.append(entry)
    doc["encoders"] = encoders
    manifest_path.parent.mkdir(parents=True, exist_ok=True)
    manifest_path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def extract_embeddings(cfg: ExtractorConfig) -> ExtractionResult:
    """Embed every frame and update the interchange files.

    Fails if the backbone's output width disagrees with the registry's
    declared embedding dimension.
    """
    frames = list_frames(cfg.image_dir)
    model, spec = load_encoder(
        cfg.encoder_id, pretrained=cfg.pretrained, seed=cfg.seed, device=cfg.device
    )
    size = cfg.image_size or spec.input_size
    embeddings = _embed_frames(
        model, spec, frames, size, cfg.batch_size, cfg.device
    )
    if embeddings.shape[1] != spec.embedding_dim:
        raise ExtractionError(
            f"{cfg.encoder_id!r} produced width {embeddings.shape[1]}, "
            f"registry declares {spec.embedding_dim}"
        )
    out_path = Path(cfg.embeddings_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    np.save(out_path, embeddings)
    _upsert_manifest(cfg, len(frames), spec.embedding_dim)
    return ExtractionResult(
        encoder_id=cfg.encoder_id,
        embeddings_path=out_path,
        n_frames=len(frames),
        embedding_dim=spec.embedding_dim,
    )
