"""Report assembly and emission: JSON, CSV, and an SVG scatter.

All three emitters are deterministic byte-for-byte for a fixed report.
Floats are printed with six decimal digits everywhere; the one exception
is the min-max epsilon in the config echo, which is carried as a string
in scientific notation because a 1e-12 floor is invisible at six
decimals.

The scatter encodes each encoder as one marker: x is the domain
invariance score, y the action score, marker radius grows with the square
root of the parameter count (scaled into [4, 16] px), color distinguishes
CNNs from transformers, and shape distinguishes manipulation-pretrained
(circle) from general-pretrained (square) encoders.  Entries without
catalog metadata fall back to a neutral gray circle.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass
from xml.sax.saxutils import escape, quoteattr

import numpy as np

from .dis import DisResult
from .ingest import DatasetManifest
from .probe import ActionNormStats, AsResult, DomainFilter, ProbeConfig
from .registry import EncoderMeta, find_encoder, meta_from_dict, meta_to_dict

ENGINE_VERSION = "0.1.0"

CSV_COLUMNS = (
    "encoder_id",
    "dis",
    "raw_gap",
    "action_score",
    "val_mse",
    "architecture",
    "pretraining",
    "parameters_millions",
    "embedding_dim",
)

_COLOR_CNN = "#1f77b4"
_COLOR_TRANSFORMER = "#ff7f0e"
_COLOR_NEUTRAL = "#9e9e9e"
_RADIUS_MIN = 4.0
_RADIUS_MAX = 16.0
_RADIUS_NEUTRAL = 6.0


class ReportError(ValueError):
    """Invalid report construction or emission request."""


@dataclass(frozen=True)
class ConfigEcho:
    """Effective settings behind one encoder's scores."""

    pca_dim: int
    epsilon: float
    probe: ProbeConfig


@dataclass(frozen=True)
class EncoderResult:
    encoder_id: str
    dis: DisResult
    as_result: AsResult
    meta: EncoderMeta | None = None
    config: ConfigEcho | None = None


@dataclass(frozen=True)
class ErrorRecord:
    encoder_id: str
    error: str


@dataclass(frozen=True)
class EvaluationReport:
    dataset_name: str
    created_at: str
    engine_version: str
    results: tuple[EncoderResult, ...]
    errors: tuple[ErrorRecord, ...] = ()


def build_report(
    results,
    manifest: DatasetManifest,
    catalog,
    errors=(),
    created_at: str = "1970-01-01T00:00:00Z",
) -> EvaluationReport:
    """Sort results by descending combined score and attach metadata.

    Results that arrived without catalog metadata are looked up once more
    here.  Duplicate encoder ids are rejected.
    """
    results = list(results)
    if not results:
        raise ReportError("a report needs at least one encoder result")
    seen: set[str] = set()
    enriched = []
    for r in results:
        if r.encoder_id in seen:
            raise ReportError(f"duplicate encoder id in results: {r.encoder_id!r}")
        seen.add(r.encoder_id)
        if r.meta is None:
            meta = find_encoder(tuple(catalog), r.encoder_id)
            if meta is not None:
                r = EncoderResult(r.encoder_id, r.dis, r.as_result, meta, r.config)
        enriched.append(r)
    enriched.sort(key=lambda r: (-(r.dis.dis + r.as_result.action_score), r.encoder_id))
    return EvaluationReport(
        dataset_name=manifest.dataset_name,
        created_at=created_at,
        engine_version=ENGINE_VERSION,
        results=tuple(enriched),
        errors=tuple(sorted(errors, key=lambda e: e.encoder_id)),
    )


def _fmt(x: float) -> str:
    return f"{float(x):.6f}"


def _float_list(values) -> list[float]:
    return [float(v) for v in values]


def _dis_to_dict(d: DisResult) -> dict:
    return {
        "dis": float(d.dis),
        "raw_gap": float(d.raw_gap),
        "effective_dim": int(d.effective_dim),
        "n_sim": int(d.n_sim),
        "n_real": int(d.n_real),
        "centroid_sim": _float_list(d.centroid_sim),
        "centroid_real": _float_list(d.centroid_real),
    }


def _as_to_dict(a: AsResult) -> dict:
    doc = {
        "action_score": float(a.action_score),
        "val_mse": float(a.val_mse),
        "train_mse_curve": _float_list(a.train_mse_curve),
    }
    if a.action_norm_stats is None:
        doc["action_norm_stats"] = None
    else:
        doc["action_norm_stats"] = {
            "mean": _float_list(a.action_norm_stats.mean),
            "std": _float_list(a.action_norm_stats.std),
        }
    return doc


def _config_to_dict(c: ConfigEcho | None) -> dict | None:
    if c is None:
        return None
    return {
        "pca_dim": int(c.pca_dim),
        "epsilon": repr(float(c.epsilon)),
        "probe": {
            "epochs": int(c.probe.epochs),
            "batch_size": int(c.probe.batch_size),
            "learning_rate": float(c.probe.learning_rate),
            "split_ratio": float(c.probe.split_ratio),
            "seed": int(c.probe.seed),
            "domain_filter": c.probe.domain_filter.value,
        },
    }


def report_to_dict(report: EvaluationReport) -> dict:
    return {
        "dataset_name": report.dataset_name,
        "created_at": report.created_at,
        "engine_version": report.engine_version,
        "results": [
            {
                "encoder_id": r.encoder_id,
                "dis": _dis_to_dict(r.dis),
                "action_score": _as_to_dict(r.as_result),
                "meta": None if r.meta is None else meta_to_dict(r.meta),
                "config": _config_to_dict(r.config),
            }
            for r in report.results
        ],
        "errors": [
            {"encoder_id": e.encoder_id, "error": e.error} for e in report.errors
        ],
    }


def _write_canonical(out: io.StringIO, value, indent: int) -> None:
    pad = "  " * indent
    if isinstance(value, dict):
        if not value:
            out.write("{}")
            return
        out.write("{\n")
        for i, (key, item) in enumerate(value.items()):
            out.write(f'{pad}  {json.dumps(key)}: ')
            _write_canonical(out, item, indent + 1)
            out.write(",\n" if i < len(value) - 1 else "\n")
        out.write(pad + "}")
    elif isinstance(value, (list, tuple)):
        if not value:
            out.write("[]")
            return
        out.write("[\n")
        for i, item in enumerate(value):
            out.write(pad + "  ")
            _write_canonical(out, item, indent + 1)
            out.write(",\n" if i < len(value) - 1 else "\n")
        out.write(pad + "]")
    elif isinstance(value, bool):
        out.write("true" if value else "false")
    elif isinstance(value, float):
        out.write(_fmt(value))
    elif isinstance(value, int):
        out.write(str(value))
    elif isinstance(value, str):
        out.write(json.dumps(value))
    elif value is None:
        out.write("null")
    else:
        raise ReportError(f"cannot serialize value of type {type(value).__name__}")


def emit_json(report: EvaluationReport) -> bytes:
    """Canonical JSON: fixed key order, six-decimal floats, 2-space indent."""
    out = io.StringIO()
    _write_canonical(out, report_to_dict(report), 0)
    out.write("\n")
    return out.getvalue().encode("utf-8")


def _dis_from_dict(doc: dict) -> DisResult:
    return DisResult(
        dis=float(doc["dis"]),
        centroid_sim=np.asarray(doc["centroid_sim"], dtype=np.float64),
        centroid_real=np.asarray(doc["centroid_real"], dtype=np.float64),
        raw_gap=float(doc["raw_gap"]),
        effective_dim=int(doc["effective_dim"]),
        n_sim=int(doc["n_sim"]),
        n_real=int(doc["n_real"]),
    )


def _as_from_dict(doc: dict) -> AsResult:
    stats_doc = doc.get("action_norm_stats")
    stats = None
    if stats_doc is not None:
        stats = ActionNormStats(
            mean=np.asarray(stats_doc["mean"], dtype=np.float64),
            std=np.asarray(stats_doc["std"], dtype=np.float64),
        )
    return AsResult(
        action_score=float(doc["action_score"]),
        val_mse=float(doc["val_mse"]),
        train_mse_curve=tuple(float(v) for v in doc["train_mse_curve"]),
        action_norm_stats=stats,
    )


def _config_from_dict(doc: dict | None) -> ConfigEcho | None:
    if doc is None:
        return None
    probe = doc["probe"]
    return ConfigEcho(
        pca_dim=int(doc["pca_dim"]),
        epsilon=float(doc["epsilon"]),
        probe=ProbeConfig(
            epochs=int(probe["epochs"]),
            batch_size=int(probe["batch_size"]),
            learning_rate=float(probe["learning_rate"]),
            split_ratio=float(probe["split_ratio"]),
            seed=int(probe["seed"]),
            domain_filter=DomainFilter(probe["domain_filter"]),
        ),
    )


def report_from_json(data: bytes | str | dict) -> EvaluationReport:
    """Inverse of :func:`emit_json`; re-emitting reproduces the bytes."""
    if isinstance(data, (bytes, str)):
        doc = json.loads(data)
    else:
        doc = data
    results = tuple(
        EncoderResult(
            encoder_id=str(r["encoder_id"]),
            dis=_dis_from_dict(r["dis"]),
            as_result=_as_from_dict(r["action_score"]),
            meta=None if r.get("meta") is None else meta_from_dict(r["meta"]),
            config=_config_from_dict(r.get("config")),
        )
        for r in doc["results"]
    )
    errors = tuple(
        ErrorRecord(encoder_id=str(e["encoder_id"]), error=str(e["error"]))
        for e in doc.get("errors", [])
    )
    return EvaluationReport(
        dataset_name=str(doc["dataset_name"]),
        created_at=str(doc["created_at"]),
        engine_version=str(doc["engine_version"]),
        results=results,
        errors=errors,
    )


def emit_csv(report: EvaluationReport) -> bytes:
    """Flat per-encoder table in report order; metadata cells may be empty."""
    lines = [",".join(CSV_COLUMNS)]
    for r in report.results:
        if r.meta is None:
            arch, pre, params, dim = "", "", "", ""
        else:
            arch = r.meta.architecture.value
            pre = r.meta.pretraining.value
            params = _fmt(r.meta.parameters_millions)
            dim = str(r.meta.embedding_dim)
        lines.append(
            ",".join(
                (
                    r.encoder_id,
                    _fmt(r.dis.dis),
                    _fmt(r.dis.raw_gap),
                    _fmt(r.as_result.action_score),
                    _fmt(r.as_result.val_mse),
                    arch,
                    pre,
                    params,
                    dim,
                )
            )
        )
    return ("\n".join(lines) + "\n").encode("utf-8")


def _px(x: float) -> str:
    return f"{x:.2f}"


def _radius_scale(report: EvaluationReport):
    roots = [
        math.sqrt(r.meta.parameters_millions)
        for r in report.results
        if r.meta is not None
    ]
    if not roots:
        return lambda p: _RADIUS_NEUTRAL
    lo, hi = min(roots), max(roots)

    def scale(params: float) -> float:
        if hi - lo < 1e-12:
            return (_RADIUS_MIN + _RADIUS_MAX) / 2.0
        t = (math.sqrt(params) - lo) / (hi - lo)
        return _RADIUS_MIN + t * (_RADIUS_MAX - _RADIUS_MIN)

    return scale


def emit_scatter_svg(
    report: EvaluationReport,
    width_px: int = 1000,
    height_px: int = 1000,
    margin_px: int = 100,
) -> bytes:
    """Deterministic SVG 1.1 scatter of (DIS, AS) with metadata encoding."""
    if width_px <= 0 or height_px <= 0:
        raise ReportError(f"canvas must be positive, got {width_px}x{height_px}")
    if width_px <= 2 * margin_px or height_px <= 2 * margin_px:
        raise ReportError(
            f"canvas {width_px}x{height_px} leaves no plot area inside "
            f"{margin_px}px margins"
        )

    plot_w = width_px - 2 * margin_px
    plot_h = height_px - 2 * margin_px

    def x_px(dis: float) -> float:
        return margin_px + dis * plot_w

    def y_px(score: float) -> float:
        return height_px - margin_px - score * plot_h

    radius_for = _radius_scale(report)
    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{width_px}" height="{height_px}" '
        f'viewBox="0 0 {width_px} {height_px}">',
        f'<rect x="0" y="0" width="{width_px}" height="{height_px}" fill="white"/>',
    ]

    # Axes with ticks every 0.2 on both unit-interval scales.
    axis_color = "#333333"
    x0, x1 = x_px(0.0), x_px(1.0)
    y0, y1 = y_px(0.0), y_px(1.0)
    parts.append(
        f'<g class="axes" stroke="{axis_color}" stroke-width="1" fill="none">'
        f'<line x1="{_px(x0)}" y1="{_px(y0)}" x2="{_px(x1)}" y2="{_px(y0)}"/>'
        f'<line x1="{_px(x0)}" y1="{_px(y0)}" x2="{_px(x0)}" y2="{_px(y1)}"/>'
        "</g>"
    )
    tick_parts = ['<g class="ticks" font-family="sans-serif" font-size="12" fill="#333333">']
    for i in range(6):
        v = i / 5.0
        tick_parts.append(
            f'<line x1="{_px(x_px(v))}" y1="{_px(y0)}" x2="{_px(x_px(v))}" '
            f'y2="{_px(y0 + 6)}" stroke="{axis_color}"/>'
            f'<text x="{_px(x_px(v))}" y="{_px(y0 + 20)}" text-anchor="middle">{v:.1f}</text>'
            f'<line x1="{_px(x0 - 6)}" y1="{_px(y_px(v))}" x2="{_px(x0)}" '
            f'y2="{_px(y_px(v))}" stroke="{axis_color}"/>'
            f'<text x="{_px(x0 - 10)}" y="{_px(y_px(v) + 4)}" text-anchor="end">{v:.1f}</text>'
        )
    tick_parts.append("</g>")
    parts.append("".join(tick_parts))
    parts.append(
        f'<text x="{_px((x0 + x1) / 2)}" y="{_px(y0 + 45)}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="16" fill="#111111">'
        "domain invariance score (DIS)</text>"
    )
    parts.append(
        f'<text x="{_px(x0 - 55)}" y="{_px((y0 + y1) / 2)}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="16" fill="#111111" '
        f'transform="rotate(-90 {_px(x0 - 55)} {_px((y0 + y1) / 2)})">'
        "action score (AS)</text>"
    )

    marker_parts = ['<g class="markers" stroke="#222222" stroke-width="0.5">']
    for r in report.results:
        cx = x_px(r.dis.dis)
        cy = y_px(r.as_result.action_score)
        ident = quoteattr(r.encoder_id)
        title = f"<title>{escape(r.encoder_id)}</title>"
        if r.meta is None:
            marker_parts.append(
                f'<circle class="marker" data-encoder={ident} cx="{_px(cx)}" '
                f'cy="{_px(cy)}" r="{_px(_RADIUS_NEUTRAL)}" '
                f'fill="{_COLOR_NEUTRAL}" fill-opacity="0.85">{title}</circle>'
            )
            continue
        radius = radius_for(r.meta.parameters_millions)
        color = (
            _COLOR_CNN
            if r.meta.architecture.value == "cnn"
            else _COLOR_TRANSFORMER
        )
        if r.meta.pretraining.value == "manipulation":
            marker_parts.append(
                f'<circle class="marker" data-encoder={ident} cx="{_px(cx)}" '
                f'cy="{_px(cy)}" r="{_px(radius)}" fill="{color}" '
                f'fill-opacity="0.85">{title}</circle>'
            )
        else:
            side = 2.0 * radius
            marker_parts.append(
                f'<rect class="marker" data-encoder={ident} x="{_px(cx - radius)}" '
                f'y="{_px(cy - radius)}" width="{_px(side)}" height="{_px(side)}" '
                f'fill="{color}" fill-opacity="0.85">{title}</rect>'
            )
        if r.meta.catalog_index is not None:
            marker_parts.append(
                f'<text class="marker-label" x="{_px(cx)}" y="{_px(cy + 4)}" '
                f'text-anchor="middle" font-family="sans-serif" font-size="11" '
                f'stroke="none" fill="#111111">{r.meta.catalog_index}</text>'
            )
    marker_parts.append("</g>")
    parts.append("".join(marker_parts))

    lx = x1 - 170
    ly = y1 + 10
    parts.append(
        '<g class="legend" font-family="sans-serif" font-size="12" fill="#111111">'
        f'<rect x="{_px(lx - 10)}" y="{_px(ly - 14)}" width="180" height="86" '
        'fill="#fafafa" stroke="#cccccc"/>'
        f'<circle cx="{_px(lx)}" cy="{_px(ly)}" r="5" fill="{_COLOR_CNN}"/>'
        f'<text x="{_px(lx + 12)}" y="{_px(ly + 4)}">CNN</text>'
        f'<circle cx="{_px(lx)}" cy="{_px(ly + 18)}" r="5" fill="{_COLOR_TRANSFORMER}"/>'
        f'<text x="{_px(lx + 12)}" y="{_px(ly + 22)}">transformer</text>'
        f'<circle cx="{_px(lx)}" cy="{_px(ly + 36)}" r="5" fill="#666666"/>'
        f'<text x="{_px(lx + 12)}" y="{_px(ly + 40)}">manipulation pre-training</text>'
        f'<rect x="{_px(lx - 5)}" y="{_px(ly + 49)}" width="10" height="10" fill="#666666"/>'
        f'<text x="{_px(lx + 12)}" y="{_px(ly + 58)}">general pre-training</text>'
        "</g>"
    )
    parts.append("</svg>")
    return ("\n".join(parts) + "\n").encode("utf-8")
