"""Command-line entry point.

Subcommands:

* ``evaluate``  score every encoder in a manifest, write report files
* ``dis``       one encoder, domain invariance only, printed to stdout
* ``as``        one encoder, action score only, printed to stdout
* ``synth``     write the 23-encoder synthetic suite

Exit codes: 0 success, 1 at least one encoder failed (a partial report is
still written), 2 usage or configuration error.

Per-encoder evaluations are independent: each one derives its own probe
seed from the base seed and the encoder id, so running with ``--jobs 8``
produces byte-identical reports to ``--jobs 1``.  The report timestamp is
taken from ``SOURCE_DATE_EPOCH`` when set, otherwise from the manifest
file's modification time, keeping repeated runs over the same inputs
reproducible.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

from . import dis as dis_mod
from . import ingest, preprocess, probe, registry, report, synth

logger = logging.getLogger(__name__)

SEED_ENV_VAR = "SIM2REAL_GAUGE_SEED"

EXIT_OK = 0
EXIT_PARTIAL = 1
EXIT_USAGE = 2

_FORMATS = ("json", "csv", "svg")
_OUTPUT_NAMES = {"json": "report.json", "csv": "report.csv", "svg": "scatter.svg"}


class CliError(ValueError):
    """Configuration problem surfaced as exit code 2."""


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV_VAR)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise CliError(f"{SEED_ENV_VAR} must be an integer, got {raw!r}") from None


def _read_manifest(path: str | Path) -> ingest.DatasetManifest:
    try:
        return ingest.read_manifest(path)
    except OSError as exc:
        raise CliError(f"cannot read manifest: {exc}") from exc


def _created_at(manifest_path: Path) -> str:
    raw = os.environ.get("SOURCE_DATE_EPOCH")
    stamp = int(raw) if raw is not None else int(manifest_path.stat().st_mtime)
    return datetime.fromtimestamp(stamp, tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def condition_embeddings(
    embeddings, pca_dim: int, epsilon: float
) -> tuple[preprocess.PcaModel, int, "object"]:
    """L2, standardize, project, min-max.  Returns (model, effective_dim, e_hat).

    The projection dimension is clamped to min(n, d) when the requested
    value exceeds it; the effective value lands in the report.
    """
    normalized = preprocess.l2_normalize_rows(embeddings)
    n, d = normalized.shape
    effective_dim = min(pca_dim, n, d)
    model, projected = preprocess.fit_standardize_pca(
        normalized, preprocess.PcaConfig(target_dim=effective_dim, epsilon=epsilon)
    )
    e_hat = preprocess.minmax_normalize(projected, epsilon)
    return model, effective_dim, e_hat


def evaluate_encoder(
    manifest: ingest.DatasetManifest,
    encoder_id: str,
    catalog,
    pca_dim: int,
    epsilon: float,
    probe_cfg: probe.ProbeConfig,
) -> report.EncoderResult:
    """Full per-encoder pipeline: load, condition, DIS, then probe, AS."""
    ds = ingest.load_dataset(manifest, encoder_id)
    meta = registry.validate_against_catalog(tuple(catalog), ds)

    normalized = preprocess.l2_normalize_rows(ds.embeddings)
    _, effective_dim, e_hat = condition_embeddings(ds.embeddings, pca_dim, epsilon)
    dis_result = dis_mod.domain_invariance_score(e_hat, ds.domains, effective_dim)

    encoder_cfg = dataclasses.replace(
        probe_cfg, seed=probe.derive_seed(probe_cfg.seed, encoder_id)
    )
    as_result = probe.evaluate_action_score(
        normalized, ds.actions, ds.domains, encoder_cfg
    )
    return report.EncoderResult(
        encoder_id=encoder_id,
        dis=dis_result,
        as_result=as_result,
        meta=meta,
        config=report.ConfigEcho(pca_dim=effective_dim, epsilon=epsilon, probe=encoder_cfg),
    )


def _probe_config(args) -> probe.ProbeConfig:
    return probe.ProbeConfig(
        epochs=args.epochs,
        batch_size=args.batch_size,
        learning_rate=args.learning_rate,
        split_ratio=args.split_ratio,
        seed=args.seed if args.seed is not None else _default_seed(),
        domain_filter=probe.DomainFilter(args.domain_filter),
    )


def _load_catalog(args):
    if args.catalog is None:
        return registry.builtin_catalog()
    return registry.load_catalog(args.catalog)


def cmd_evaluate(args) -> int:
    manifest_path = Path(args.manifest)
    manifest = _read_manifest(manifest_path)
    catalog = _load_catalog(args)
    probe_cfg = _probe_config(args)
    formats = args.formats.split(",")
    for fmt in formats:
        if fmt not in _FORMATS:
            raise CliError(f"unknown format {fmt!r}; choose from {', '.join(_FORMATS)}")

    def run(encoder_id: str):
        try:
            return evaluate_encoder(
                manifest, encoder_id, catalog, args.pca_dim, args.epsilon, probe_cfg
            )
        except Exception as exc:
            logger.error("encoder %s failed: %s", encoder_id, exc)
            return report.ErrorRecord(encoder_id=encoder_id, error=str(exc))

    ids = [e.encoder_id for e in manifest.encoders]
    with ThreadPoolExecutor(max_workers=max(1, args.jobs)) as pool:
        outcomes = list(pool.map(run, ids))

    results = [o for o in outcomes if isinstance(o, report.EncoderResult)]
    errors = [o for o in outcomes if isinstance(o, report.ErrorRecord)]
    if not results:
        logger.error("every encoder failed; no report written")
        return EXIT_PARTIAL

    rpt = report.build_report(
        results,
        manifest,
        catalog,
        errors=errors,
        created_at=_created_at(manifest_path),
    )
    out_dir = Path(args.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    emitters = {
        "json": report.emit_json,
        "csv": report.emit_csv,
        "svg": report.emit_scatter_svg,
    }
    for fmt in formats:
        (out_dir / _OUTPUT_NAMES[fmt]).write_bytes(emitters[fmt](rpt))
    print(f"evaluated {len(results)} encoders, {len(errors)} failed; wrote {out_dir}")
    return EXIT_PARTIAL if errors else EXIT_OK


def _require_encoder(manifest: ingest.DatasetManifest, encoder_id: str) -> None:
    if all(e.encoder_id != encoder_id for e in manifest.encoders):
        raise CliError(f"encoder not in manifest: {encoder_id!r}")


def cmd_dis(args) -> int:
    manifest = _read_manifest(args.manifest)
    _require_encoder(manifest, args.encoder_id)
    try:
        ds = ingest.load_dataset(manifest, args.encoder_id)
        _, effective_dim, e_hat = condition_embeddings(
            ds.embeddings, args.pca_dim, args.epsilon
        )
        result = dis_mod.domain_invariance_score(e_hat, ds.domains, effective_dim)
    except Exception as exc:
        logger.error("%s", exc)
        return EXIT_PARTIAL
    print(f"DIS {result.dis:.6f}")
    print(f"raw_gap {result.raw_gap:.6f}")
    print(f"effective_dim {result.effective_dim}")
    print(f"n_sim {result.n_sim}")
    print(f"n_real {result.n_real}")
    return EXIT_OK


def cmd_as(args) -> int:
    manifest = _read_manifest(args.manifest)
    _require_encoder(manifest, args.encoder_id)
    probe_cfg = _probe_config(args)
    try:
        ds = ingest.load_dataset(manifest, args.encoder_id)
        normalized = preprocess.l2_normalize_rows(ds.embeddings)
        encoder_cfg = dataclasses.replace(
            probe_cfg, seed=probe.derive_seed(probe_cfg.seed, args.encoder_id)
        )
        result = probe.evaluate_action_score(
            normalized, ds.actions, ds.domains, encoder_cfg
        )
    except Exception as exc:
        logger.error("%s", exc)
        return EXIT_PARTIAL
    print(f"AS {result.action_score:.6f}")
    print(f"val_mse {result.val_mse:.6f}")
    print(f"final_train_mse {result.train_mse_curve[-1]:.6f}")
    print(f"epochs {len(result.train_mse_curve)}")
    return EXIT_OK


def cmd_synth(args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    manifest_path = synth.generate_suite(
        args.out_dir,
        seed=seed,
        n_per_domain=args.n_per_domain,
        dim=args.dim,
        action_dim=args.action_dim,
    )
    print(f"wrote synthetic suite manifest {manifest_path}")
    return EXIT_OK


def _add_pca_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--pca-dim", type=int, default=preprocess.DEFAULT_TARGET_DIM,
                   help="shared projection dimension (clamped to min(n, d))")
    p.add_argument("--epsilon", type=float, default=preprocess.DEFAULT_EPSILON,
                   help="min-max denominator floor")


def _add_probe_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--batch-size", type=int, default=256)
    p.add_argument("--learning-rate", type=float, default=0.5)
    p.add_argument("--split-ratio", type=float, default=0.8)
    p.add_argument("--seed", type=int, default=None,
                   help=f"base seed (default 0, or ${SEED_ENV_VAR} when set)")
    p.add_argument("--domain-filter", choices=[f.value for f in probe.DomainFilter],
                   default="all", help="which domain(s) the probe trains on")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sim2real-gauge",
        description="Score vision encoder embeddings for sim-to-real transfer.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_eval = sub.add_parser("evaluate", help="score every encoder in a manifest")
    p_eval.add_argument("--manifest", required=True)
    p_eval.add_argument("--output-dir", required=True)
    p_eval.add_argument("--catalog", default=None,
                        help="catalog JSON overriding the built-in one")
    p_eval.add_argument("--formats", default="json,csv,svg",
                        help="comma-separated subset of json,csv,svg")
    p_eval.add_argument("--jobs", type=int, default=1,
                        help="max encoders evaluated concurrently")
    _add_pca_flags(p_eval)
    _add_probe_flags(p_eval)
    p_eval.set_defaults(func=cmd_evaluate)

    p_dis = sub.add_parser("dis", help="domain invariance score for one encoder")
    p_dis.add_argument("encoder_id")
    p_dis.add_argument("--manifest", required=True)
    _add_pca_flags(p_dis)
    p_dis.set_defaults(func=cmd_dis)

    p_as = sub.add_parser("as", help="action score for one encoder")
    p_as.add_argument("encoder_id")
    p_as.add_argument("--manifest", required=True)
    _add_probe_flags(p_as)
    p_as.set_defaults(func=cmd_as)

    p_synth = sub.add_parser("synth", help="write the synthetic benchmark suite")
    p_synth.add_argument("--out-dir", required=True)
    p_synth.add_argument("--seed", type=int, default=None)
    p_synth.add_argument("--n-per-domain", type=int, default=2000)
    p_synth.add_argument("--dim", type=int, default=24)
    p_synth.add_argument("--action-dim", type=int, default=4)
    p_synth.set_defaults(func=cmd_synth)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except (CliError, ingest.ManifestError, registry.RegistryError) as exc:
        logger.error("%s", exc)
        return EXIT_USAGE
    except OSError as exc:
        logger.error("%s", exc)
        return EXIT_PARTIAL


if __name__ == "__main__":
    sys.exit(main())
