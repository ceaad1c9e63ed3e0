"""Domain invariance score tests against hand-computed cases."""

import numpy as np
import pytest

from sim2real_gauge.dis import DisError, centroid, domain_invariance_score
from sim2real_gauge.ingest import DomainLabels


def labels(*flags) -> DomainLabels:
    return DomainLabels(is_real=np.array(flags, dtype=bool))


class TestCentroid:
    def test_two_rows(self):
        e = np.array([[0.0, 0.0], [2.0, 2.0]])
        np.testing.assert_array_equal(centroid(e, np.array([True, True])), [1.0, 1.0])

    def test_single_row_is_identity(self):
        e = np.array([[0.3, 0.7], [0.9, 0.1]])
        np.testing.assert_array_equal(centroid(e, np.array([False, True])), e[1])

    def test_matches_summation_oracle(self, rng):
        e = rng.uniform(size=(100, 8))
        mask = rng.uniform(size=100) < 0.4
        expected = sum(e[i] for i in range(100) if mask[i]) / mask.sum()
        np.testing.assert_allclose(centroid(e, mask), expected, atol=1e-12)

    def test_empty_mask_rejected(self):
        with pytest.raises(DisError, match="empty"):
            centroid(np.ones((3, 2)), np.zeros(3, dtype=bool))


class TestDomainInvarianceScore:
    def test_identical_domains_score_one(self):
        rows = np.array([[0.2, 0.8], [0.5, 0.5], [0.2, 0.8], [0.5, 0.5]])
        result = domain_invariance_score(rows, labels(False, False, True, True), 2)
        assert result.dis == 1.0
        assert result.raw_gap == 0.0

    def test_opposite_corners_score_zero(self):
        d = 5
        rows = np.vstack([np.zeros((3, d)), np.ones((4, d))])
        flags = labels(*([False] * 3 + [True] * 4))
        result = domain_invariance_score(rows, flags, d)
        assert result.dis == 0.0
        assert abs(result.raw_gap - np.sqrt(d)) < 1e-12

    def test_hand_computed_four_point_fixture(self):
        rows = np.array([[0.0, 0.0], [0.2, 0.0], [1.0, 0.0], [0.8, 0.0]])
        result = domain_invariance_score(rows, labels(False, False, True, True), 2)
        assert abs(result.raw_gap - 0.8) < 1e-12
        assert abs(result.dis - (1.0 - 0.8 / np.sqrt(2.0))) < 1e-12
        np.testing.assert_allclose(result.centroid_sim, [0.1, 0.0])
        np.testing.assert_allclose(result.centroid_real, [0.9, 0.0])
        assert result.n_sim == 2 and result.n_real == 2

    def test_single_domain_rejected(self):
        with pytest.raises(DisError, match="both domains"):
            domain_invariance_score(np.ones((3, 2)), labels(True, True, True), 2)

    def test_label_swap_symmetry(self, rng):
        e = rng.uniform(size=(40, 6))
        flags = rng.uniform(size=40) < 0.5
        flags[0], flags[1] = False, True
        a = domain_invariance_score(e, DomainLabels(is_real=flags), 6)
        b = domain_invariance_score(e, DomainLabels(is_real=~flags), 6)
        assert a.dis == b.dis
        assert a.raw_gap == b.raw_gap

    def test_within_domain_permutation_invariance(self, rng):
        e = rng.uniform(size=(30, 4))
        flags = np.arange(30) % 2 == 0
        base = domain_invariance_score(e, DomainLabels(is_real=flags), 4)
        sim_idx = np.flatnonzero(~flags)
        perm = sim_idx[rng.permutation(sim_idx.size)]
        shuffled = e.copy()
        shuffled[sim_idx] = e[perm]
        after = domain_invariance_score(shuffled, DomainLabels(is_real=flags), 4)
        assert abs(base.dis - after.dis) < 1e-12

    def test_monotone_in_mean_shift_on_raw_gaussians(self):
        """DIS falls as the controlled shift between two Gaussians grows.

        The base draws are shared across shift values so only the shift
        itself moves the centroids.
        """
        d = 16
        rng = np.random.default_rng(1000)
        sim = rng.standard_normal((2000, d))
        real_base = rng.standard_normal((2000, d))
        flags = DomainLabels(is_real=np.repeat([False, True], 2000))
        scores = []
        for delta in np.arange(0.0, 1.01, 0.1):
            e = np.vstack([sim, real_base + delta / np.sqrt(d)])
            scores.append(domain_invariance_score(e, flags, d).dis)
        assert all(b <= a for a, b in zip(scores, scores[1:]))

    def test_effective_dim_must_match_width(self):
        with pytest.raises(DisError, match="effective_dim"):
            domain_invariance_score(np.ones((2, 3)), labels(False, True), 2)

    def test_clamp_never_fires_inside_unit_box(self, rng):
        for _ in range(100):
            n = int(rng.integers(2, 30))
            d = int(rng.integers(1, 8))
            e = rng.uniform(size=(n, d))
            flags = rng.uniform(size=n) < 0.5
            flags[0], flags[-1] = False, True
            result = domain_invariance_score(e, DomainLabels(is_real=flags), d)
            assert result.raw_gap <= np.sqrt(d) + 1e-12
            assert result.dis == 1.0 - result.raw_gap / np.sqrt(d)
