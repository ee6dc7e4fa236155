import math

import numpy as np
import pytest

from mergelimits.errors import ConfigError
from mergelimits.subspace import (
    N_LOG_BANDS,
    band_counts,
    components_for_threshold,
    pca_explained,
    principal_angles,
    spectrum_report,
    sv_tail_stats,
)
from mergelimits.tensorio import LowRankDelta, RngStream


class TestBandCounts:
    def test_overflow_band(self):
        counts = band_counts(np.array([1.0, 2.5, 100.0]))
        assert counts[0] == 3 and counts.sum() == 3

    def test_interior_bands(self):
        # 0.5 in [e^-1, 1) -> band 0; 0.1 in [e^-3, e^-2) -> band 2.
        counts = band_counts(np.array([0.5, 0.1]))
        assert counts[1] == 1
        assert counts[3] == 1

    def test_exact_edge_goes_to_upper_band(self):
        # A value equal to e^-k sits at the closed lower edge of band k-1.
        for k in range(1, N_LOG_BANDS):
            counts = band_counts(np.array([math.exp(-k)]))
            assert counts[1 + (k - 1)] == 1, f"edge e^-{k}"

    def test_underflow_band(self):
        counts = band_counts(np.array([0.0, 1e-30, math.exp(-14)]))
        assert counts[-1] == 3

    def test_planted_spectrum_recovered(self):
        gen = RngStream(60, 0).generator()
        planted = np.zeros(N_LOG_BANDS + 2, dtype=np.int64)
        vals = []
        for band in range(N_LOG_BANDS):
            n = int(gen.integers(1, 6))
            planted[1 + band] += n
            # Strictly interior draws so float noise cannot cross an edge.
            lo, hi = math.exp(-(band + 1)), math.exp(-band)
            vals.extend(gen.uniform(lo * 1.01, hi * 0.99, size=n))
        assert np.array_equal(band_counts(np.array(vals)), planted)

    def test_total_is_input_length(self):
        gen = RngStream(60, 1).generator()
        sv = np.exp(gen.uniform(-16, 2, size=500))
        assert band_counts(sv).sum() == 500


class TestSpectrumReport:
    def test_fractions_sum_to_one(self):
        gen = RngStream(61, 0).generator()
        rep = spectrum_report(np.abs(gen.normal(size=40)))
        assert rep.explained_fractions.sum() == pytest.approx(1.0, abs=1e-10)
        assert np.all(np.diff(rep.singular_values) <= 0)

    def test_band_fractions(self):
        rep = spectrum_report(np.array([2.0, 0.5]))
        assert rep.band_fractions[0] == pytest.approx(0.5)
        assert rep.band_fractions[1] == pytest.approx(0.5)

    def test_degenerate_all_zero(self):
        rep = spectrum_report(np.zeros(4))
        assert rep.degenerate and rep.rank == 0

    def test_rank_counts_nonzeros(self):
        rep = spectrum_report(np.array([3.0, 1.0, 0.0, 0.0]))
        assert rep.rank == 2


class TestPCAExplained:
    def test_rank_one_without_centering(self):
        # Identical rows span one direction; all variance in one component.
        row = np.array([1.0, 2.0, 2.0])
        m = np.tile(row, (5, 1))
        rep = pca_explained(m, center=False)
        assert rep.explained_fractions[0] == pytest.approx(1.0, abs=1e-12)
        sv = rep.singular_values
        assert np.sum(sv > 1e-10 * sv[0]) == 1

    def test_centering_kills_common_mode(self):
        m = np.tile(np.array([1.0, 2.0, 2.0]), (5, 1))
        rep = pca_explained(m, center=True)
        assert rep.degenerate

    def test_orthogonal_pair_splits_evenly(self):
        m = np.array([[1.0, 0.0], [0.0, 1.0]])
        rep = pca_explained(m, center=False)
        assert np.allclose(rep.explained_fractions, [0.5, 0.5], atol=1e-12)

    def test_planted_rank_exact(self):
        gen = RngStream(62, 0).generator()
        r, n, d = 4, 12, 60
        m = gen.normal(size=(n, r)) @ gen.normal(size=(r, d))
        rep = pca_explained(m, center=False)
        assert np.sum(rep.singular_values > 1e-10 * rep.singular_values[0]) == r
        assert rep.explained_fractions[:r].sum() == pytest.approx(1.0, abs=1e-10)

    def test_matches_covariance_eigvals(self):
        # Oracle: eigendecomposition of the Gram matrix of centered rows.
        gen = RngStream(62, 1).generator()
        m = gen.normal(size=(8, 20))
        rep = pca_explained(m)
        c = m - m.mean(axis=0, keepdims=True)
        eig = np.sort(np.linalg.eigvalsh(c @ c.T))[::-1]
        eig = np.clip(eig, 0.0, None)
        assert np.allclose(rep.singular_values[:8] ** 2, eig, atol=1e-8)


class TestComponentsForThreshold:
    def test_single_component(self):
        rep = spectrum_report(np.array([1.0, 0.0, 0.0]))
        assert components_for_threshold(rep, 0.999) == 1

    def test_even_split(self):
        rep = spectrum_report(np.array([1.0, 1.0]))
        assert components_for_threshold(rep, 0.5) == 1
        assert components_for_threshold(rep, 0.51) == 2
        assert components_for_threshold(rep, 1.0) == 2

    def test_at_most_planted_rank(self):
        gen = RngStream(63, 0).generator()
        r = 5
        m = gen.normal(size=(10, r)) @ gen.normal(size=(r, 40))
        rep = pca_explained(m, center=False)
        assert components_for_threshold(rep, 0.999) <= r

    def test_bad_inputs(self):
        rep = spectrum_report(np.array([1.0]))
        with pytest.raises(ConfigError):
            components_for_threshold(rep, 0.0)
        with pytest.raises(ConfigError):
            components_for_threshold(rep, 1.5)
        with pytest.raises(ConfigError):
            components_for_threshold(spectrum_report(np.zeros(3)), 0.9)


class TestPrincipalAngles:
    def test_identical_subspace(self):
        b = np.eye(5)[:, :2]
        assert np.allclose(principal_angles(b, b), [0.0, 0.0], atol=1e-6)

    def test_orthogonal_subspaces(self):
        a = np.eye(4)[:, :2]
        b = np.eye(4)[:, 2:]
        assert np.allclose(principal_angles(a, b), [90.0, 90.0], atol=1e-8)

    def test_mixed_zero_and_ninety(self):
        a = np.eye(3)[:, :2]  # span{e1, e2}
        b = np.eye(3)[:, 1:]  # span{e2, e3}
        assert np.allclose(principal_angles(a, b), [0.0, 90.0], atol=1e-6)

    def test_planted_45_degrees(self):
        a = np.eye(2)[:, :1]
        b = np.array([[1.0], [1.0]]) / math.sqrt(2)
        assert principal_angles(a, b)[0] == pytest.approx(45.0, abs=1e-8)

    def test_rotation_invariance(self):
        from mergelimits.geometry import haar_orthogonal

        gen = RngStream(64, 0).generator()
        a, _ = np.linalg.qr(gen.normal(size=(10, 3)))
        b, _ = np.linalg.qr(gen.normal(size=(10, 4)))
        q = haar_orthogonal(10, gen)
        base = principal_angles(a, b)
        rotated = principal_angles(q @ a, q @ b)
        assert np.allclose(base, rotated, atol=1e-7)

    def test_rejects_non_orthonormal(self):
        with pytest.raises(ConfigError):
            principal_angles(np.ones((3, 2)), np.eye(3)[:, :1])

    def test_rejects_dim_mismatch(self):
        with pytest.raises(ConfigError):
            principal_angles(np.eye(3)[:, :1], np.eye(4)[:, :1])


class TestSvTailStats:
    def test_low_rank_band_bound(self):
        gen = RngStream(65, 0).generator()
        d = LowRankDelta(gen.normal(size=(16, 3)), gen.normal(size=(3, 16)))
        rep = sv_tail_stats(d)
        sv = rep.singular_values
        assert np.sum(sv > 1e-10 * sv[0]) <= 3
        assert rep.counts_per_log_band[:-1].sum() <= 3

    def test_dense_matches_numpy_svd(self):
        gen = RngStream(65, 1).generator()
        m = gen.normal(size=(6, 9))
        rep = sv_tail_stats(m)
        assert np.allclose(rep.singular_values, np.linalg.svd(m, compute_uv=False))

    def test_all_zero_rejected(self):
        with pytest.raises(ConfigError):
            sv_tail_stats(np.zeros((4, 4)))
