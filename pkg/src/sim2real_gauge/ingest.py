"""Binary array ingestion and dataset assembly.

Three file kinds share one interchange format, NPY version 1.0:

* embeddings, one ``n x d_z`` file per encoder,
* domain labels, an ``n x 1`` file holding exactly 0.0 (sim) or 1.0 (real),
* actions, one ``n x d_a`` file shared by every encoder.

A JSON manifest ties them together.  Relative paths inside the manifest
are resolved against the manifest's own directory.

The NPY reader/writer is deliberately strict: version 1.0 only, little
endian ``<f4`` or ``<f8`` payloads, C order, 1-D or 2-D shapes.  The
writer pads the header with spaces so the preamble is 64-byte aligned and
ends with a newline, byte-compatible with the format emitted by the numpy
ecosystem.
"""

from __future__ import annotations

import ast
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .linalg import as_matrix

NPY_MAGIC = b"\x93NUMPY"
_HEADER_ALIGN = 64
_SUPPORTED_DESCR = {"<f4": np.dtype("<f4"), "<f8": np.dtype("<f8")}


class IngestError(ValueError):
    """Base class for ingestion failures."""


class NpyFormatError(IngestError):
    """A structural violation of the NPY 1.0 format.

    ``field`` names the offending part of the file: one of ``magic``,
    ``version``, ``header``, ``descr``, ``fortran_order``, ``shape`` or
    ``payload``.
    """

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class ManifestError(IngestError):
    """Invalid or inconsistent dataset manifest."""


class DatasetMismatchError(IngestError):
    """Loaded arrays disagree with each other or with the manifest."""


@dataclass(frozen=True)
class EncoderEntry:
    encoder_id: str
    embeddings_path: str
    declared_dim: int


@dataclass(frozen=True)
class DatasetManifest:
    dataset_name: str
    image_height: int
    image_width: int
    channels: int
    domains_path: str
    actions_path: str
    encoders: tuple[EncoderEntry, ...]
    base_dir: Path = field(default_factory=Path)

    def entry(self, encoder_id: str) -> EncoderEntry:
        for e in self.encoders:
            if e.encoder_id == encoder_id:
                return e
        raise ManifestError(f"unknown encoder id: {encoder_id!r}")

    def resolve(self, path: str) -> Path:
        p = Path(path)
        return p if p.is_absolute() else self.base_dir / p


@dataclass(frozen=True)
class DomainLabels:
    """Per-row sim/real flags; ``is_real[i]`` is True for the real domain."""

    is_real: np.ndarray

    def __post_init__(self):
        if self.is_real.ndim != 1 or self.is_real.size == 0:
            raise IngestError("domain labels must be a non-empty 1-D vector")

    def __len__(self) -> int:
        return int(self.is_real.size)

    @property
    def n_sim(self) -> int:
        return int((~self.is_real).sum())

    @property
    def n_real(self) -> int:
        return int(self.is_real.sum())

    @property
    def sim_mask(self) -> np.ndarray:
        return ~self.is_real

    @property
    def real_mask(self) -> np.ndarray:
        return self.is_real

    @classmethod
    def from_floats(cls, values: np.ndarray) -> "DomainLabels":
        """Decode the 0.0 = sim / 1.0 = real column convention."""
        flat = np.asarray(values, dtype=np.float64).reshape(-1)
        bad = ~((flat == 0.0) | (flat == 1.0))
        if bad.any():
            first = int(np.argmax(bad))
            raise IngestError(
                f"domain label at row {first} is {flat[first]!r}; "
                "labels must be exactly 0.0 (sim) or 1.0 (real)"
            )
        return cls(is_real=flat == 1.0)

    def to_floats(self) -> np.ndarray:
        return self.is_real.astype(np.float64).reshape(-1, 1)


@dataclass(frozen=True)
class EncoderDataset:
    encoder_id: str
    embeddings: np.ndarray
    domains: DomainLabels
    actions: np.ndarray


def read_npy(path: str | Path) -> np.ndarray:
    """Parse one NPY 1.0 file into an ``n x d`` float64 matrix.

    1-D payloads come back as ``n x 1``; ``<f4`` payloads are widened to
    float64.  Every structural defect raises :class:`NpyFormatError`
    naming the offending field.
    """
    raw = Path(path).read_bytes()
    if len(raw) < 10 or raw[:6] != NPY_MAGIC:
        raise NpyFormatError("magic", f"not an NPY file: {Path(path)}")
    major, minor = raw[6], raw[7]
    if (major, minor) != (1, 0):
        raise NpyFormatError("version", f"unsupported NPY version {major}.{minor}")
    (header_len,) = struct.unpack("<H", raw[8:10])
    if len(raw) < 10 + header_len:
        raise NpyFormatError("header", "file truncated inside the header")
    header_text = raw[10 : 10 + header_len].decode("latin1")
    try:
        header = ast.literal_eval(header_text)
    except (ValueError, SyntaxError) as exc:
        raise NpyFormatError("header", f"unparseable header dict: {exc}") from exc
    if not isinstance(header, dict) or set(header) != {
        "descr",
        "fortran_order",
        "shape",
    }:
        raise NpyFormatError("header", f"unexpected header keys: {sorted(header)}")

    descr = header["descr"]
    if descr not in _SUPPORTED_DESCR:
        raise NpyFormatError("descr", f"unsupported dtype {descr!r}; need <f4 or <f8")
    if header["fortran_order"] is not False:
        raise NpyFormatError("fortran_order", "Fortran-ordered payloads not supported")
    shape = header["shape"]
    if (
        not isinstance(shape, tuple)
        or len(shape) not in (1, 2)
        or not all(isinstance(s, int) and s > 0 for s in shape)
    ):
        raise NpyFormatError("shape", f"shape must be 1-D or 2-D and non-empty, got {shape!r}")

    dtype = _SUPPORTED_DESCR[descr]
    count = int(np.prod(shape))
    payload = raw[10 + header_len :]
    expected = count * dtype.itemsize
    if len(payload) != expected:
        raise NpyFormatError(
            "payload", f"expected {expected} payload bytes, found {len(payload)}"
        )
    data = np.frombuffer(payload, dtype=dtype).astype(np.float64, copy=True)
    if not np.isfinite(data).all():
        raise NpyFormatError("payload", "payload contains NaN or Inf entries")
    if len(shape) == 1:
        return data.reshape(shape[0], 1)
    return data.reshape(shape)


def write_npy(m: np.ndarray, path: str | Path) -> None:
    """Write a matrix as NPY 1.0, ``<f8``, C order.

    The header is padded with spaces to a 64-byte-aligned preamble and
    terminated with a newline.  Empty matrices are rejected.
    """
    m = as_matrix(m, "matrix")
    if m.size == 0:
        raise IngestError(f"refusing to write empty matrix of shape {m.shape}")
    header = (
        "{'descr': '<f8', 'fortran_order': False, "
        f"'shape': ({m.shape[0]}, {m.shape[1]}), }}"
    )
    pad = _HEADER_ALIGN - ((len(NPY_MAGIC) + 4 + len(header) + 1) % _HEADER_ALIGN)
    pad %= _HEADER_ALIGN
    header_bytes = (header + " " * pad + "\n").encode("latin1")
    preamble = NPY_MAGIC + b"\x01\x00" + struct.pack("<H", len(header_bytes))
    try:
        with open(path, "wb") as fh:
            fh.write(preamble)
            fh.write(header_bytes)
            fh.write(np.ascontiguousarray(m, dtype="<f8").tobytes())
    except OSError as exc:
        raise IngestError(f"failed to write {path}: {exc}") from exc


def _require(obj: dict, key: str, kind: type, where: str):
    if key not in obj:
        raise ManifestError(f"{where} is missing required field {key!r}")
    value = obj[key]
    if kind is int and isinstance(value, bool):
        raise ManifestError(f"{where} field {key!r} must be {kind.__name__}")
    if not isinstance(value, kind):
        raise ManifestError(f"{where} field {key!r} must be {kind.__name__}")
    return value


def manifest_from_dict(doc: dict, base_dir: str | Path = ".") -> DatasetManifest:
    """Validate a parsed manifest JSON document."""
    name = _require(doc, "dataset_name", str, "manifest")
    height = _require(doc, "image_height", int, "manifest")
    width = _require(doc, "image_width", int, "manifest")
    channels = _require(doc, "channels", int, "manifest")
    domains_path = _require(doc, "domains_path", str, "manifest")
    actions_path = _require(doc, "actions_path", str, "manifest")
    encoders_doc = _require(doc, "encoders", list, "manifest")
    if min(height, width, channels) < 1:
        raise ManifestError("image dimensions and channels must be positive")
    if not domains_path or not actions_path:
        raise ManifestError("domains_path and actions_path must be non-empty")
    if not encoders_doc:
        raise ManifestError("manifest lists no encoders")

    entries = []
    seen: set[str] = set()
    for i, enc in enumerate(encoders_doc):
        where = f"encoders[{i}]"
        if not isinstance(enc, dict):
            raise ManifestError(f"{where} must be an object")
        encoder_id = _require(enc, "encoder_id", str, where)
        embeddings_path = _require(enc, "embeddings_path", str, where)
        declared_dim = _require(enc, "declared_dim", int, where)
        if encoder_id in seen:
            raise ManifestError(f"duplicate encoder id: {encoder_id!r}")
        if not encoder_id or not embeddings_path:
            raise ManifestError(f"{where} has an empty id or path")
        if declared_dim < 1:
            raise ManifestError(
                f"{where} declared_dim must be >= 1, got {declared_dim}"
            )
        seen.add(encoder_id)
        entries.append(EncoderEntry(encoder_id, embeddings_path, declared_dim))

    return DatasetManifest(
        dataset_name=name,
        image_height=height,
        image_width=width,
        channels=channels,
        domains_path=domains_path,
        actions_path=actions_path,
        encoders=tuple(entries),
        base_dir=Path(base_dir),
    )


def read_manifest(path: str | Path) -> DatasetManifest:
    """Load and validate a manifest JSON file."""
    p = Path(path)
    try:
        doc = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ManifestError(f"manifest {p} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ManifestError(f"manifest {p} must be a JSON object")
    return manifest_from_dict(doc, base_dir=p.parent)


def load_dataset(manifest: DatasetManifest, encoder_id: str) -> EncoderDataset:
    """Load one encoder's embeddings plus the shared domains and actions.

    Cross-checks the three row counts and the embedding width against the
    manifest's declared dimension.
    """
    entry = manifest.entry(encoder_id)
    embeddings = read_npy(manifest.resolve(entry.embeddings_path))
    domains_raw = read_npy(manifest.resolve(manifest.domains_path))
    actions = read_npy(manifest.resolve(manifest.actions_path))

    if domains_raw.shape[1] != 1:
        raise DatasetMismatchError(
            f"domain labels must be a single column, got shape {domains_raw.shape}"
        )
    domains = DomainLabels.from_floats(domains_raw)

    n_e, n_d, n_a = embeddings.shape[0], len(domains), actions.shape[0]
    if not (n_e == n_d == n_a):
        raise DatasetMismatchError(
            f"row counts disagree for {encoder_id!r}: "
            f"embeddings {n_e}, domains {n_d}, actions {n_a}"
        )
    if embeddings.shape[1] != entry.declared_dim:
        raise DatasetMismatchError(
            f"{encoder_id!r} embedding width {embeddings.shape[1]} does not match "
            f"declared_dim {entry.declared_dim}"
        )
    return EncoderDataset(
        encoder_id=encoder_id,
        embeddings=embeddings,
        domains=domains,
        actions=actions,
    )
