"""Acceptance gate: every release criterion at its stated tolerance.

Run with ``pytest tests/test_acceptance.py -s`` to see one line per
criterion.  Each test prints ``[PASS]`` on success or ``[FAIL]`` before
re-raising, so the gate reads as a checklist.
"""

import json
import math
import time
import xml.etree.ElementTree as ET
from contextlib import contextmanager

import numpy as np
import pytest

from sim2real_gauge import cli
from sim2real_gauge.dis import domain_invariance_score
from sim2real_gauge.ingest import DomainLabels, load_dataset, read_manifest, read_npy, write_npy
from sim2real_gauge.preprocess import PcaConfig, fit_standardize_pca
from sim2real_gauge.probe import (
    LinearProbe,
    ProbeConfig,
    action_score,
    evaluate_action_score,
    probe_gradient,
    split_dataset,
    standardize_actions,
)
from sim2real_gauge.registry import builtin_catalog, find_encoder
from sim2real_gauge.report import build_report, emit_json, emit_scatter_svg, report_from_json
from sim2real_gauge.synth import SHIFT_FAMILY_IDS, SynthSpec, generate
from tests.test_probe import closed_form_probe, finite_difference_grads
from tests.test_registry import CATALOG_REFERENCE
from tests.test_report import make_manifest, make_result

SVG_NS = "{http://www.w3.org/2000/svg}"


@contextmanager
def criterion(number: int, description: str):
    try:
        yield
    except BaseException:
        print(f"[FAIL] criterion {number}: {description}")
        raise
    print(f"[PASS] criterion {number}: {description}")


@pytest.fixture(scope="module")
def suite(tmp_path_factory):
    """Full-size synthetic suite written through the CLI, with timing."""
    out = tmp_path_factory.mktemp("acceptance-suite")
    start = time.perf_counter()
    rc = cli.main(["synth", "--out-dir", str(out), "--seed", "0"])
    elapsed = time.perf_counter() - start
    assert rc == cli.EXIT_OK
    return {"dir": out, "synth_seconds": elapsed}


def test_criterion_1_dis_hand_case():
    rows = np.array([[0.0, 0.0], [0.2, 0.0], [1.0, 0.0], [0.8, 0.0]])
    flags = DomainLabels(is_real=np.array([False, False, True, True]))
    with criterion(1, "four-point DIS fixture within 1e-9, under 1 ms"):
        domain_invariance_score(rows, flags, 2)  # warm-up
        best = math.inf
        for _ in range(5):
            start = time.perf_counter()
            result = domain_invariance_score(rows, flags, 2)
            best = min(best, time.perf_counter() - start)
        expected = 1.0 - 0.8 / math.sqrt(2.0)
        assert abs(result.dis - expected) < 1e-9
        assert best < 1e-3


def test_criterion_2_dis_boundaries_and_clamp():
    with criterion(2, "DIS boundary cases exact; clamp inert on 1,000 fuzzed sets"):
        identical = np.tile(np.array([[0.3, 0.6, 0.9]]), (6, 1))
        flags = DomainLabels(is_real=np.arange(6) % 2 == 0)
        assert domain_invariance_score(identical, flags, 3).dis == 1.0

        corners = np.vstack([np.zeros((4, 3)), np.ones((5, 3))])
        corner_flags = DomainLabels(is_real=np.repeat([False, True], [4, 5]))
        assert domain_invariance_score(corners, corner_flags, 3).dis == 0.0

        rng = np.random.default_rng(2024)
        for _ in range(1000):
            n = int(rng.integers(2, 40))
            d = int(rng.integers(1, 9))
            e = rng.uniform(size=(n, d))
            is_real = rng.uniform(size=n) < 0.5
            is_real[0], is_real[-1] = False, True
            result = domain_invariance_score(e, DomainLabels(is_real=is_real), d)
            unclamped = 1.0 - result.raw_gap / math.sqrt(d)
            assert unclamped >= 0.0
            assert result.dis == unclamped


def test_criterion_3_dis_monotone_on_shift_family(suite):
    with criterion(3, "DIS non-increasing (slack 0.02) along the shift family, under 10 s"):
        manifest = read_manifest(suite["dir"] / "manifest.json")
        start = time.perf_counter()
        scores = []
        for encoder_id in SHIFT_FAMILY_IDS:
            ds = load_dataset(manifest, encoder_id)
            _, eff, e_hat = cli.condition_embeddings(ds.embeddings, 50, 1e-12)
            scores.append(domain_invariance_score(e_hat, ds.domains, eff).dis)
        elapsed = time.perf_counter() - start
        assert len(scores) == 11
        assert all(b <= a + 0.02 for a, b in zip(scores, scores[1:]))
        assert elapsed < 10.0


def _brute_force_pca(e: np.ndarray, d_star: int):
    """Independent oracle: explicit covariance, matmul, plain-Python Jacobi.

    Shares no code with the production path; everything below works on
    Python lists.
    """
    n, d = e.shape
    x = [[float(v) for v in row] for row in e]
    mean = [sum(row[j] for row in x) / n for j in range(d)]
    std = [
        math.sqrt(sum((row[j] - mean[j]) ** 2 for row in x) / n) for j in range(d)
    ]
    xs = [
        [
            0.0 if std[j] < 1e-12 else (row[j] - mean[j]) / std[j]
            for j in range(d)
        ]
        for row in x
    ]
    cov = [
        [sum(xs[r][i] * xs[r][j] for r in range(n)) / n for j in range(d)]
        for i in range(d)
    ]

    a = [row[:] for row in cov]
    v = [[1.0 if i == j else 0.0 for j in range(d)] for i in range(d)]
    for _ in range(100):
        off = math.sqrt(sum(a[i][j] ** 2 for i in range(d) for j in range(d) if i != j))
        if off < 1e-10:
            break
        for p in range(d - 1):
            for q in range(p + 1, d):
                if a[p][q] == 0.0:
                    continue
                theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q])
                t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(1.0, theta))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                for i in range(d):
                    aip, aiq = a[i][p], a[i][q]
                    a[i][p] = c * aip - s * aiq
                    a[i][q] = s * aip + c * aiq
                for i in range(d):
                    api, aqi = a[p][i], a[q][i]
                    a[p][i] = c * api - s * aqi
                    a[q][i] = s * api + c * aqi
                for i in range(d):
                    vip, viq = v[i][p], v[i][q]
                    v[i][p] = c * vip - s * viq
                    v[i][q] = s * vip + c * viq

    pairs = sorted(
        ((a[k][k], [v[i][k] for i in range(d)]) for k in range(d)),
        key=lambda kv: -kv[0],
    )
    values = [kv[0] for kv in pairs[:d_star]]
    vectors = []
    for _, col in pairs[:d_star]:
        peak = max(range(d), key=lambda i: abs(col[i]))
        vectors.append([-c for c in col] if col[peak] < 0 else col)
    projected = [
        [sum(xs[r][i] * vec[i] for i in range(d)) for vec in vectors]
        for r in range(n)
    ]
    return values, np.array(projected)


def test_criterion_4_pca_matches_brute_force_oracle():
    with criterion(4, "fit_standardize_pca equals the covariance+Jacobi oracle within 1e-7"):
        rng = np.random.default_rng(4242)
        for _ in range(50):
            e = rng.standard_normal((64, 12)) * rng.uniform(0.5, 2.0, size=12)
            model, projected = fit_standardize_pca(e, PcaConfig(target_dim=12))
            oracle_values, oracle_projected = _brute_force_pca(e, 12)
            np.testing.assert_allclose(
                model.explained_variance, oracle_values, atol=1e-7
            )
            np.testing.assert_allclose(projected, oracle_projected, atol=1e-7)


def test_criterion_5_gradients_match_finite_differences():
    with criterion(5, "analytic probe gradients within 1e-5 of central differences"):
        rng = np.random.default_rng(55)
        for _ in range(100):
            d_z = int(rng.integers(1, 9))
            d_a = int(rng.integers(1, 4))
            batch = int(rng.integers(1, 17))
            probe = LinearProbe(
                weights=rng.standard_normal((d_a, d_z)),
                bias=rng.standard_normal(d_a),
            )
            z = rng.standard_normal((batch, d_z))
            a = rng.standard_normal((batch, d_a))
            gw, gb = probe_gradient(probe, z, a)
            fw, fb = finite_difference_grads(probe, z, a, h=1e-6)
            scale = max(np.abs(fw).max(), np.abs(fb).max(), 1e-12)
            assert np.abs(gw - fw).max() / scale < 1e-5
            assert np.abs(gb - fb).max() / scale < 1e-5


def test_criterion_6_noiseless_linear_recovery():
    with criterion(6, "noiseless linear task: AS >= 0.99, within 0.02 of least squares, under 20 s"):
        rng = np.random.default_rng(66)
        n, d_z, d_a = 2000, 16, 4
        z = rng.standard_normal((n, d_z))
        m = rng.standard_normal((d_a, d_z))
        m /= np.linalg.norm(m, axis=1, keepdims=True)
        a = z @ m.T
        flags = DomainLabels(is_real=np.repeat([False, True], n // 2))
        cfg = ProbeConfig(seed=6)

        start = time.perf_counter()
        sgd = evaluate_action_score(z, a, flags, cfg)
        elapsed = time.perf_counter() - start

        split = split_dataset(n, cfg, flags)
        standardized, _ = standardize_actions(a, split.train_indices)
        exact = closed_form_probe(z, standardized, split.train_indices)
        oracle = action_score(exact, z, standardized, split.val_indices)

        assert sgd.action_score >= 0.99
        assert abs(sgd.action_score - oracle.action_score) <= 0.02
        assert elapsed < 20.0


def test_criterion_7_pure_noise_floor():
    with criterion(7, "signal-free embeddings score AS <= 0.1"):
        ds = generate(
            SynthSpec(
                n_per_domain=1000, dim=16, action_dim=4,
                signal_fraction=0.0, noise_sigma=1.0, seed=7,
            )
        )
        result = evaluate_action_score(
            ds.embeddings, ds.actions, ds.domains, ProbeConfig(seed=7)
        )
        assert result.action_score <= 0.1


def test_criterion_8_end_to_end_determinism(suite, tmp_path):
    with criterion(8, "synth+evaluate byte-identical at jobs=1 and jobs=8, under 60 s"):
        manifest = str(suite["dir"] / "manifest.json")
        catalog = str(suite["dir"] / "catalog.json")

        start = time.perf_counter()
        rc1 = cli.main(
            ["evaluate", "--manifest", manifest, "--catalog", catalog,
             "--output-dir", str(tmp_path / "j1"), "--jobs", "1"]
        )
        evaluate_seconds = time.perf_counter() - start
        rc8 = cli.main(
            ["evaluate", "--manifest", manifest, "--catalog", catalog,
             "--output-dir", str(tmp_path / "j8"), "--jobs", "8"]
        )
        assert rc1 == cli.EXIT_OK and rc8 == cli.EXIT_OK
        for name in ("report.json", "report.csv", "scatter.svg"):
            a = (tmp_path / "j1" / name).read_bytes()
            b = (tmp_path / "j8" / name).read_bytes()
            assert a == b, f"{name} differs between jobs=1 and jobs=8"
        doc = json.loads((tmp_path / "j1" / "report.json").read_text())
        assert len(doc["results"]) == 23
        assert suite["synth_seconds"] + evaluate_seconds < 60.0


def test_criterion_9_format_fidelity(tmp_path):
    with criterion(9, "1,000 NPY round trips bit-exact; SVG structure follows the encoding"):
        rng = np.random.default_rng(9)
        path = tmp_path / "fuzz.npy"
        for _ in range(1000):
            rows = int(rng.integers(1, 12))
            cols = int(rng.integers(1, 9))
            scale = 10.0 ** rng.integers(-12, 12)
            m = rng.uniform(-1.0, 1.0, size=(rows, cols)) * scale
            write_npy(m, path)
            out = read_npy(path)
            assert out.shape == m.shape
            assert out.tobytes() == m.tobytes()

        catalog = builtin_catalog()
        results = [
            make_result(
                meta.encoder_id,
                0.05 + 0.9 * (i / 22.0),
                0.95 - 0.9 * (i / 22.0),
                meta=meta,
            )
            for i, meta in enumerate(catalog)
        ]
        report = build_report(
            results, make_manifest([m.encoder_id for m in catalog]), catalog
        )
        svg = emit_scatter_svg(report)
        root = ET.fromstring(svg)  # well-formed XML or this raises
        markers = {
            el.get("data-encoder"): el
            for el in root.iter()
            if el.get("class") == "marker"
        }
        assert len(markers) == 23

        def marker_radius(el):
            if el.tag == f"{SVG_NS}circle":
                return float(el.get("r"))
            return float(el.get("width")) / 2.0

        for meta in catalog:
            el = markers[meta.encoder_id]
            expected_color = "#1f77b4" if meta.architecture.value == "cnn" else "#ff7f0e"
            assert el.get("fill") == expected_color
            expected_tag = (
                f"{SVG_NS}circle"
                if meta.pretraining.value == "manipulation"
                else f"{SVG_NS}rect"
            )
            assert el.tag == expected_tag
        # Radii are read back from 2-decimal SVG coordinates; a square's
        # side is 2r, so parsed values carry up to 0.005 px quantization.
        ordered = sorted(catalog, key=lambda m: m.parameters_millions)
        radii = [marker_radius(markers[m.encoder_id]) for m in ordered]
        assert all(b >= a - 0.011 for a, b in zip(radii, radii[1:]))
        assert min(radii) >= 4.0 - 0.011 and max(radii) <= 16.0 + 0.011

        json_bytes = emit_json(report)
        assert emit_json(report_from_json(json_bytes)) == json_bytes


def test_criterion_10_registry_matches_reference_table():
    with criterion(10, "built-in catalog matches the 23-row reference table"):
        catalog = builtin_catalog()
        assert len(catalog) == 23
        by_id = {m.encoder_id: m for m in catalog}
        for index, enc_id, arch, dim, params, training, pretraining in CATALOG_REFERENCE:
            meta = by_id[enc_id]
            assert meta.catalog_index == index
            assert meta.architecture.value == arch
            assert meta.embedding_dim == dim
            assert meta.parameters_millions == pytest.approx(params)
            assert meta.training_type.value == training
            assert meta.pretraining.value == pretraining
        assert find_encoder(catalog, "MCR").embedding_dim == 2048
        assert find_encoder(catalog, "VGG-16").parameters_millions == 138
