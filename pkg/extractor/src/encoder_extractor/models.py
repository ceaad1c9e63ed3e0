"""Encoder registry: torchvision backbones exposed as embedding functions.

Each entry builds the stock architecture and swaps the classification
head for an identity (or truncates it) so the forward pass returns the
penultimate feature vector.  ``embedding_dim`` is the width the registry
promises for that encoder; extraction fails loudly if the network
disagrees.

``cam_layer`` names the convolutional stage whose activations and
gradients feed the saliency overlay; encoders without a usable
convolutional stage (the ViT family here) set it to None and saliency
export records a skip for them.

Weights default to a seeded random initialization so everything runs
offline; pass ``pretrained=True`` to pull the published checkpoints when
the environment has network access.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import torch
from torch import nn
from torchvision import models as tvm


class ModelError(ValueError):
    """Unknown encoder or a backbone that violates its registry entry."""


@dataclass(frozen=True)
class EncoderSpec:
    encoder_id: str
    embedding_dim: int
    input_size: int
    build: Callable[[bool], nn.Module]
    cam_layer: Optional[Callable[[nn.Module], nn.Module]]


def _weights(pretrained: bool):
    return "DEFAULT" if pretrained else None


def _resnet(builder):
    def build(pretrained: bool) -> nn.Module:
        model = builder(weights=_weights(pretrained))
        model.fc = nn.Identity()
        return model

    return build


def _vgg(builder):
    def build(pretrained: bool) -> nn.Module:
        model = builder(weights=_weights(pretrained))
        # Drop the final dropout+classifier pair; the forward pass then
        # ends at the second 4096-wide ReLU.
        model.classifier = nn.Sequential(*list(model.classifier)[:-2])
        return model

    return build


def _efficientnet_b0(pretrained: bool) -> nn.Module:
    model = tvm.efficientnet_b0(weights=_weights(pretrained))
    model.classifier = nn.Identity()
    return model


def _mobilenet_v3(pretrained: bool) -> nn.Module:
    model = tvm.mobilenet_v3_large(weights=_weights(pretrained))
    # Keep the 960 -> 1280 projection and its activation, drop the rest.
    model.classifier = nn.Sequential(model.classifier[0], model.classifier[1])
    return model


def _vit_b_16(pretrained: bool) -> nn.Module:
    model = tvm.vit_b_16(weights=_weights(pretrained))
    model.heads = nn.Identity()
    return model


ENCODERS: dict[str, EncoderSpec] = {
    spec.encoder_id: spec
    for spec in (
        EncoderSpec("resnet18", 512, 224, _resnet(tvm.resnet18), lambda m: m.layer4),
        EncoderSpec("resnet34", 512, 224, _resnet(tvm.resnet34), lambda m: m.layer4),
        EncoderSpec("resnet50", 2048, 224, _resnet(tvm.resnet50), lambda m: m.layer4),
        EncoderSpec("resnet101", 2048, 224, _resnet(tvm.resnet101), lambda m: m.layer4),
        EncoderSpec("vgg-16", 4096, 224, _vgg(tvm.vgg16), lambda m: m.features),
        EncoderSpec("vgg-19", 4096, 224, _vgg(tvm.vgg19), lambda m: m.features),
        EncoderSpec("efficientnet-b0", 1280, 224, _efficientnet_b0, lambda m: m.features),
        EncoderSpec("mobilenetv3", 1280, 224, _mobilenet_v3, lambda m: m.features),
        EncoderSpec("vit", 768, 224, _vit_b_16, None),
    )
}


def encoder_spec(encoder_id: str) -> EncoderSpec:
    key = encoder_id.strip().lower()
    if key not in ENCODERS:
        known = ", ".join(sorted(ENCODERS))
        raise ModelError(f"unknown encoder {encoder_id!r}; known: {known}")
    return ENCODERS[key]


def load_encoder(
    encoder_id: str, pretrained: bool = False, seed: int = 0, device: str = "cpu"
) -> tuple[nn.Module, EncoderSpec]:
    """Build the encoder in eval mode; random init is seeded for replay."""
    spec = encoder_spec(encoder_id)
    torch.manual_seed(seed)
    try:
        model = spec.build(pretrained)
    except Exception as exc:
        raise ModelError(f"failed to load {encoder_id!r}: {exc}") from exc
    return model.to(device).eval(), spec
