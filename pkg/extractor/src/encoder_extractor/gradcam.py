"""Qualitative saliency overlays from activation gradients.

This is a supporting visual check, not part of the scoring path: the map
highlights which image regions drive the embedding's energy at the
designated convolutional stage.  The backprop target is the squared L2
norm of the embedding, so no classifier head is needed.

Maps are normalized by their maximum (floored) rather than min-max
rescaled: a flat map must stay flat instead of having its border noise
amplified to full range.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from PIL import Image

from .extract import ExtractorConfig, frame_to_tensor
from .models import load_encoder


@dataclass(frozen=True)
class GradCamOutcome:
    encoder_id: str
    frame: Path
    status: str  # "written" or "skipped"
    overlay_path: Path | None = None
    reason: str = ""


def _heat_rgb(cam: np.ndarray) -> np.ndarray:
    """Map [0, 1] intensities to a blue-to-red ramp, shape (h, w, 3)."""
    r = np.clip(cam * 2.0, 0.0, 1.0)
    b = np.clip(2.0 - cam * 2.0, 0.0, 1.0)
    g = np.clip(1.0 - np.abs(cam - 0.5) * 2.0, 0.0, 1.0)
    return np.stack([r, g, b], axis=-1)


def compute_cam(model, cam_layer, tensor: torch.Tensor) -> np.ndarray:
    """Gradient-weighted activation map in [0, 1] for one input tensor."""
    captured: dict[str, torch.Tensor] = {}

    def forward_hook(_module, _inputs, output):
        captured["activations"] = output
        output.register_hook(lambda grad: captured.__setitem__("gradients", grad))

    handle = cam_layer.register_forward_hook(forward_hook)
    try:
        embedding = model(tensor.unsqueeze(0))
        model.zero_grad(set_to_none=True)
        (embedding**2).sum().backward()
    finally:
        handle.remove()

    activations = captured["activations"].detach()[0]
    gradients = captured["gradients"].detach()[0]
    weights = gradients.mean(dim=(1, 2), keepdim=True)
    cam = torch.relu((weights * activations).sum(dim=0)).numpy()
    return cam / max(float(cam.max()), 1e-8)


def export_gradcam(cfg: ExtractorConfig, frame: Path, out_dir: Path) -> GradCamOutcome:
    """Write ``<frame>_cam.png`` next to the run's other overlays.

    Encoders without a designated convolutional stage are recorded as
    skipped rather than failed.
    """
    frame = Path(frame)
    model, spec = load_encoder(
        cfg.encoder_id, pretrained=cfg.pretrained, seed=cfg.seed, device="cpu"
    )
    if spec.cam_layer is None:
        return GradCamOutcome(
            encoder_id=cfg.encoder_id,
            frame=frame,
            status="skipped",
            reason="no convolutional stage designated for activation capture",
        )

    size = cfg.image_size or spec.input_size
    cam = compute_cam(model, spec.cam_layer(model), frame_to_tensor(frame, size))

    with Image.open(frame) as original:
        original = original.convert("RGB")
        width, height = original.size
        cam_image = Image.fromarray((cam * 255).astype(np.uint8), mode="L")
        cam_full = np.asarray(
            cam_image.resize((width, height), Image.BILINEAR), dtype=np.float64
        ) / 255.0
        heat = (_heat_rgb(cam_full) * 255).astype(np.uint8)
        base = np.asarray(original, dtype=np.float64)
        overlay = (0.55 * base + 0.45 * heat).astype(np.uint8)

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    overlay_path = out_dir / f"{frame.stem}_cam.png"
    Image.fromarray(overlay).save(overlay_path)
    return GradCamOutcome(
        encoder_id=cfg.encoder_id,
        frame=frame,
        status="written",
        overlay_path=overlay_path,
    )
