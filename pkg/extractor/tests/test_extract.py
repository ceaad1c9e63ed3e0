"""Extraction tests: shapes, ordering, determinism, manifest upkeep."""

import json
from pathlib import Path

import numpy as np
import pytest

from encoder_extractor.extract import (
    ExtractionError,
    ExtractorConfig,
    extract_embeddings,
    list_frames,
)
from encoder_extractor.models import ModelError, encoder_spec, load_encoder

from conftest import write_frames


def make_config(frames_dir: Path, out_dir: Path, encoder_id: str, **overrides):
    defaults = dict(
        encoder_id=encoder_id,
        image_dir=frames_dir,
        manifest_path=out_dir / "manifest.json",
        embeddings_path=out_dir / "embeddings" / f"{encoder_id}.npy",
        batch_size=4,
    )
    defaults.update(overrides)
    return ExtractorConfig(**defaults)


class TestListFrames:
    def test_lexicographic_order(self, tmp_path):
        for name in ("c.png", "a.png", "b.jpg"):
            write_frames(tmp_path, 1, seed=1)
            (tmp_path / "frame_000.png").rename(tmp_path / name)
        names = [p.name for p in list_frames(tmp_path)]
        assert names == ["a.png", "b.jpg", "c.png"]

    def test_empty_directory_rejected(self, tmp_path):
        with pytest.raises(ExtractionError, match="no image frames"):
            list_frames(tmp_path)


class TestExtractEmbeddings:
    def test_resnet18_shape_and_dtype(self, frames_dir, tmp_path):
        result = extract_embeddings(make_config(frames_dir, tmp_path, "resnet18"))
        stored = np.load(result.embeddings_path)
        assert stored.shape == (8, 512)
        assert stored.dtype == np.float32
        assert np.isfinite(stored).all()

    def test_vgg16_width(self, frames_dir, tmp_path):
        result = extract_embeddings(
            make_config(frames_dir, tmp_path, "vgg-16", batch_size=2)
        )
        assert result.embedding_dim == 4096
        assert np.load(result.embeddings_path).shape == (8, 4096)

    def test_rerun_is_deterministic(self, frames_dir, tmp_path):
        cfg = make_config(frames_dir, tmp_path, "resnet18")
        extract_embeddings(cfg)
        first = np.load(cfg.embeddings_path)
        extract_embeddings(cfg)
        second = np.load(cfg.embeddings_path)
        np.testing.assert_allclose(first, second, atol=1e-6)

    def test_rows_follow_filename_order(self, tmp_path):
        # Embedding the frames one directory at a time must reproduce the
        # corresponding rows of the batched run, in sorted-name order.
        frames = write_frames(tmp_path / "all", 3, seed=3)
        batched = extract_embeddings(make_config(tmp_path / "all", tmp_path / "out", "resnet18"))
        together = np.load(batched.embeddings_path)
        for row, frame in enumerate(sorted(frames, key=lambda p: p.name)):
            solo_dir = tmp_path / f"solo-{row}"
            solo_dir.mkdir()
            (solo_dir / frame.name).write_bytes(frame.read_bytes())
            solo = extract_embeddings(
                make_config(solo_dir, tmp_path / f"solo-out-{row}", "resnet18")
            )
            np.testing.assert_allclose(
                np.load(solo.embeddings_path)[0], together[row], atol=1e-5
            )

    def test_unknown_encoder(self, frames_dir, tmp_path):
        with pytest.raises(ModelError, match="unknown encoder"):
            extract_embeddings(make_config(frames_dir, tmp_path, "made-up-net"))

    def test_width_mismatch_is_an_error(self, frames_dir, tmp_path, monkeypatch):
        spec = encoder_spec("resnet18")
        monkeypatch.setitem(
            __import__("encoder_extractor.models", fromlist=["ENCODERS"]).ENCODERS,
            "resnet18",
            type(spec)(
                encoder_id="resnet18",
                embedding_dim=999,
                input_size=spec.input_size,
                build=spec.build,
                cam_layer=spec.cam_layer,
            ),
        )
        with pytest.raises(ExtractionError, match="512.*999|999.*512"):
            extract_embeddings(make_config(frames_dir, tmp_path, "resnet18"))


class TestManifestUpkeep:
    def test_new_manifest_skeleton(self, frames_dir, tmp_path):
        cfg = make_config(frames_dir, tmp_path, "resnet18")
        extract_embeddings(cfg)
        doc = json.loads(cfg.manifest_path.read_text())
        assert doc["image_height"] == 240
        assert doc["image_width"] == 320
        assert doc["channels"] == 3
        assert doc["encoders"] == [
            {
                "encoder_id": "resnet18",
                "embeddings_path": "embeddings/resnet18.npy",
                "declared_dim": 512,
            }
        ]

    def test_upsert_preserves_other_entries(self, frames_dir, tmp_path):
        extract_embeddings(make_config(frames_dir, tmp_path, "resnet18"))
        extract_embeddings(make_config(frames_dir, tmp_path, "efficientnet-b0"))
        extract_embeddings(make_config(frames_dir, tmp_path, "resnet18"))
        doc = json.loads((tmp_path / "manifest.json").read_text())
        ids = [e["encoder_id"] for e in doc["encoders"]]
        assert sorted(ids) == ["efficientnet-b0", "resnet18"]
        assert len(ids) == 2


class TestLoadEncoder:
    def test_seeded_init_reproducible(self):
        a, _ = load_encoder("resnet18", seed=5)
        b, _ = load_encoder("resnet18", seed=5)
        pa = next(iter(a.parameters())).detach().numpy()
        pb = next(iter(b.parameters())).detach().numpy()
        np.testing.assert_array_equal(pa, pb)

    def test_registered_dims_match_forward_pass(self):
        import torch

        for encoder_id in ("resnet18", "mobilenetv3", "vit"):
            model, spec = load_encoder(encoder_id)
            with torch.no_grad():
                out = model(torch.zeros(1, 3, spec.input_size, spec.input_size))
            assert out.shape == (1, spec.embedding_dim)
