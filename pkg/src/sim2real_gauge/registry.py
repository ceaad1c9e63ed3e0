"""Built-in encoder catalog for report enrichment and dimension checks.

Each entry records the architecture class, embedding width, parameter
count in millions, training style, and pre-training data category of one
published vision encoder.  Unknown encoder ids are allowed everywhere;
they simply skip dimension validation with a logged warning, since users
will evaluate encoders beyond this catalog.

The catalog can be replaced by a JSON file of the same shape via
:func:`load_catalog`.
"""

from __future__ import annotations

import enum
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

from .ingest import EncoderDataset

logger = logging.getLogger(__name__)


class RegistryError(ValueError):
    """Catalog parse or validation failure."""


class DimensionMismatchError(RegistryError):
    """Dataset embedding width disagrees with the catalog."""


class Architecture(enum.Enum):
    CNN = "cnn"
    TRANSFORMER = "transformer"


class TrainingType(enum.Enum):
    SUPERVISED = "supervised"
    SELF_SUPERVISED = "self_supervised"


class Pretraining(enum.Enum):
    GENERAL = "general"
    MANIPULATION = "manipulation"


def _parse_enum(kind, token: str, where: str):
    try:
        return kind(token)
    except ValueError:
        valid = ", ".join(m.value for m in kind)
        raise RegistryError(
            f"{where}: unknown token {token!r}; expected one of {valid}"
        ) from None


@dataclass(frozen=True)
class EncoderMeta:
    encoder_id: str
    display_name: str
    architecture: Architecture
    embedding_dim: int
    parameters_millions: float
    training_type: TrainingType
    pretraining: Pretraining
    catalog_index: int | None = None
    pretraining_detail: str = ""
    note: str = ""

    def __post_init__(self):
        if self.embedding_dim < 1:
            raise RegistryError(f"embedding_dim must be >= 1, got {self.embedding_dim}")
        if not self.parameters_millions > 0:
            raise RegistryError(
                f"parameters_millions must be positive, got {self.parameters_millions}"
            )


def _entry(
    index: int,
    encoder_id: str,
    display_name: str,
    arch: Architecture,
    dim: int,
    params: float,
    training: TrainingType,
    pretraining: Pretraining,
    detail: str = "",
    note: str = "",
) -> EncoderMeta:
    return EncoderMeta(
        encoder_id=encoder_id,
        display_name=display_name,
        architecture=arch,
        embedding_dim=dim,
        parameters_millions=params,
        training_type=training,
        pretraining=pretraining,
        catalog_index=index,
        pretraining_detail=detail or pretraining.value,
        note=note,
    )


_CNN = Architecture.CNN
_VIT = Architecture.TRANSFORMER
_SUP = TrainingType.SUPERVISED
_SSL = TrainingType.SELF_SUPERVISED
_GEN = Pretraining.GENERAL
_MAN = Pretraining.MANIPULATION

_CATALOG: tuple[EncoderMeta, ...] = (
    _entry(1, "clip-base-16", "CLIP-Base-16", _VIT, 512, 51, _SSL, _GEN),
    _entry(2, "clip-base-32", "CLIP-Base-32", _VIT, 512, 151, _SSL, _GEN),
    _entry(3, "clip-large-14", "CLIP-Large-14", _VIT, 768, 432, _SSL, _GEN),
    _entry(4, "dinov2-b", "DinoV2-B", _VIT, 768, 86, _SSL, _GEN),
    _entry(5, "efficientnet-b0", "EfficientNet B0", _CNN, 1280, 5.3, _SUP, _GEN),
    _entry(6, "hrp-resnet18", "HRP-ResNet18", _CNN, 512, 11.7, _SUP, _MAN),
    _entry(7, "hrp-vit", "HRP-ViT", _VIT, 768, 24, _SUP, _MAN),
    _entry(8, "mcr", "MCR", _CNN, 2048, 5.9, _SSL, _MAN, detail="robot manipulation"),
    _entry(9, "mobilenetv3", "MobileNetV3", _CNN, 1280, 5.4, _SUP, _GEN),
    _entry(10, "mvp", "MVP", _VIT, 768, 43, _SSL, _MAN),
    _entry(11, "r3m-resnet18", "R3M ResNet18", _CNN, 512, 11.7, _SSL, _MAN),
    _entry(12, "r3m-resnet34", "R3M ResNet34", _CNN, 512, 21.3, _SSL, _MAN),
    _entry(13, "r3m-resnet50", "R3M ResNet50", _CNN, 2048, 25.6, _SSL, _MAN),
    _entry(14, "resnet18", "ResNet18", _CNN, 512, 11.7, _SUP, _GEN, detail="general (imagenet)"),
    _entry(15, "resnet34", "ResNet34", _CNN, 512, 21.3, _SUP, _GEN, detail="general (imagenet)"),
    _entry(16, "resnet50", "ResNet50", _CNN, 2048, 25.6, _SUP, _GEN, detail="general (imagenet)"),
    _entry(17, "resnet101", "ResNet101", _CNN, 2048, 44.6, _SUP, _GEN, detail="general (imagenet)"),
    _entry(18, "swin-transformer", "Swin Transformer", _VIT, 1024, 87, _SSL, _GEN),
    _entry(
        19,
        "vc1-b",
        "VC1-B",
        _CNN,
        768,
        22.6,
        _SSL,
        _GEN,
        note=(
            "cataloged as CNN, although the upstream VC-1 release is a "
            "transformer family; kept verbatim from the source catalog"
        ),
    ),
    _entry(20, "vgg-16", "VGG-16", _CNN, 4096, 138, _SUP, _GEN),
    _entry(21, "vgg-19", "VGG-19", _CNN, 4096, 143, _SUP, _GEN),
    _entry(22, "vip", "VIP", _CNN, 1024, 22.6, _SSL, _MAN),
    _entry(23, "vit", "Vision Transformer (ViT)", _VIT, 768, 86, _SUP, _GEN, detail="general (imagenet)"),
)


def builtin_catalog() -> tuple[EncoderMeta, ...]:
    """The 23-entry built-in catalog."""
    return _CATALOG


def normalize_id(name: str) -> str:
    return name.strip().lower().replace(" ", "-")


def find_encoder(catalog: tuple[EncoderMeta, ...], encoder_id: str) -> EncoderMeta | None:
    """Case-insensitive lookup by id or display name; None when absent."""
    wanted = normalize_id(encoder_id)
    for meta in catalog:
        if wanted == meta.encoder_id or wanted == normalize_id(meta.display_name):
            return meta
    return None


def validate_dims(meta: EncoderMeta, ds: EncoderDataset) -> None:
    """Check the dataset's embedding width against the catalog entry."""
    width = ds.embeddings.shape[1]
    if width != meta.embedding_dim:
        raise DimensionMismatchError(
            f"{meta.encoder_id!r}: dataset embedding width {width} does not "
            f"match catalog embedding_dim {meta.embedding_dim}"
        )


def validate_against_catalog(
    catalog: tuple[EncoderMeta, ...], ds: EncoderDataset
) -> EncoderMeta | None:
    """Look up and dimension-check a dataset; unknown ids warn and pass."""
    meta = find_encoder(catalog, ds.encoder_id)
    if meta is None:
        logger.warning(
            "encoder %r is not in the catalog; dimension validation skipped",
            ds.encoder_id,
        )
        return None
    validate_dims(meta, ds)
    return meta


def meta_to_dict(meta: EncoderMeta) -> dict:
    doc = {
        "encoder_id": meta.encoder_id,
        "display_name": meta.display_name,
        "architecture": meta.architecture.value,
        "embedding_dim": meta.embedding_dim,
        "parameters_millions": float(meta.parameters_millions),
        "training_type": meta.training_type.value,
        "pretraining": meta.pretraining.value,
        "catalog_index": meta.catalog_index,
        "pretraining_detail": meta.pretraining_detail,
    }
    if meta.note:
        doc["note"] = meta.note
    return doc


def meta_from_dict(doc: dict, where: str = "catalog entry") -> EncoderMeta:
    try:
        return EncoderMeta(
            encoder_id=str(doc["encoder_id"]),
            display_name=str(doc.get("display_name", doc["encoder_id"])),
            architecture=_parse_enum(Architecture, doc["architecture"], where),
            embedding_dim=int(doc["embedding_dim"]),
            parameters_millions=float(doc["parameters_millions"]),
            training_type=_parse_enum(TrainingType, doc["training_type"], where),
            pretraining=_parse_enum(Pretraining, doc["pretraining"], where),
            catalog_index=(
                int(doc["catalog_index"]) if doc.get("catalog_index") is not None else None
            ),
            pretraining_detail=str(doc.get("pretraining_detail", "")),
            note=str(doc.get("note", "")),
        )
    except KeyError as exc:
        raise RegistryError(f"{where} is missing required field {exc}") from exc


def load_catalog(path: str | Path) -> tuple[EncoderMeta, ...]:
    """Read a catalog override from a JSON list of entry objects."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise RegistryError(f"catalog {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, list):
        raise RegistryError(f"catalog {path} must be a JSON list")
    entries = tuple(
        meta_from_dict(item, where=f"catalog entry {i}") for i, item in enumerate(doc)
    )
    seen: set[str] = set()
    for meta in entries:
        if meta.encoder_id in seen:
            raise RegistryError(f"duplicate catalog id: {meta.encoder_id!r}")
        seen.add(meta.encoder_id)
    return entries


def dump_catalog(catalog: tuple[EncoderMeta, ...], path: str | Path) -> None:
    Path(path).write_text(
        json.dumps([meta_to_dict(m) for m in catalog], indent=2) + "\n",
        encoding="utf-8",
    )
