"""Command-line front end for embedding extraction and saliency export."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .extract import ExtractionError, ExtractorConfig, extract_embeddings, list_frames
from .gradcam import export_gradcam
from .models import ModelError

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="encoder-extract",
        description=(
            "Embed every frame in a directory with one pre-trained vision "
            "encoder and write NPY embeddings plus a manifest entry."
        ),
    )
    parser.add_argument("--encoder", required=True, help="registered encoder id")
    parser.add_argument("--image-dir", required=True)
    parser.add_argument("--manifest", required=True,
                        help="manifest JSON to create or update")
    parser.add_argument("--embeddings-out", required=True,
                        help="output path for the n x d embeddings file")
    parser.add_argument("--batch-size", type=int, default=8)
    parser.add_argument("--image-size", type=int, default=0,
                        help="square resize edge; 0 uses the encoder default")
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--seed", type=int, default=0,
                        help="initialization seed when running without checkpoints")
    parser.add_argument("--pretrained", action="store_true",
                        help="load published checkpoints (needs network access)")
    parser.add_argument("--gradcam-dir", default=None,
                        help="also write one saliency overlay per frame here")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    cfg = ExtractorConfig(
        encoder_id=args.encoder,
        image_dir=Path(args.image_dir),
        manifest_path=Path(args.manifest),
        embeddings_path=Path(args.embeddings_out),
        batch_size=args.batch_size,
        image_size=args.image_size,
        device=args.device,
        seed=args.seed,
        pretrained=args.pretrained,
    )
    try:
        result = extract_embeddings(cfg)
    except (ExtractionError, ModelError, OSError) as exc:
        logger.error("%s", exc)
        return 1
    print(
        f"wrote {result.n_frames} x {result.embedding_dim} embeddings for "
        f"{result.encoder_id} to {result.embeddings_path}"
    )

    if args.gradcam_dir is not None:
        skipped = 0
        for frame in list_frames(cfg.image_dir):
            outcome = export_gradcam(cfg, frame, Path(args.gradcam_dir))
            if outcome.status == "skipped":
                skipped += 1
                logger.warning("saliency skipped for %s: %s", frame.name, outcome.reason)
        written = len(list_frames(cfg.image_dir)) - skipped
        print(f"saliency overlays: {written} written, {skipped} skipped")
    return 0


if __name__ == "__main__":
    sys.exit(main())
