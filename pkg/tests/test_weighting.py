"""Similarity transforms and mean-normalized sample weights."""

import numpy as np
import pytest

from gclkit.errors import ConfigError
from gclkit.similarity import SimilarityMatrix
from gclkit.weighting import (
    CandidateSets,
    TemperaturePair,
    WeightTable,
    negative_weights,
    positive_weights,
    transform_neg,
    transform_pos,
    weight_set,
)


class TestTransforms:
    def test_pos_at_zero(self):
        assert transform_pos(0.0, 0.5) == 0.0

    def test_pos_at_tau(self):
        np.testing.assert_allclose(transform_pos(0.4, 0.4), np.e - 1.0, atol=1e-12)

    def test_pos_value(self):
        np.testing.assert_allclose(transform_pos(0.8, 0.4), 6.38905609893065, atol=1e-12)

    def test_pos_monotone(self):
        s = np.linspace(0, 1, 50)
        t = transform_pos(s, 0.3)
        assert np.all(np.diff(t) > 0)

    def test_pos_clamp_warns(self):
        with pytest.warns(RuntimeWarning, match="clamped"):
            v = transform_pos(1.0, 1e-4)
        assert np.isfinite(v)

    def test_neg_at_zero(self):
        assert transform_neg(0.0, 0.5) == 1.0

    def test_neg_at_tau(self):
        np.testing.assert_allclose(transform_neg(0.25, 0.25), 1 / np.e, atol=1e-12)

    def test_neg_value(self):
        np.testing.assert_allclose(transform_neg(0.5, 0.25), np.exp(-2.0), atol=1e-12)

    def test_neg_monotone_decreasing(self):
        s = np.linspace(0, 1, 50)
        d = transform_neg(s, 0.3)
        assert np.all(np.diff(d) < 0)

    def test_bad_temperatures(self):
        with pytest.raises(ConfigError):
            transform_pos(0.5, 0.0)
        with pytest.raises(ConfigError):
            transform_neg(0.5, -1.0)
        with pytest.raises(ConfigError):
            TemperaturePair(tau_p=0.0, tau_n=1.0)


def sim_matrix(row, n=None):
    """Similarity matrix whose 0th row is ``row``."""
    row = np.asarray(row, dtype=float)
    n = n or row.size
    values = np.zeros((max(n, row.size), max(n, row.size)))
    values[0, : row.size] = row
    return SimilarityMatrix(values, "fused")


class TestPositiveWeights:
    def test_equal_similarities_give_unit_weights(self):
        sims = sim_matrix([0.3, 0.3, 0.3])
        w = positive_weights(0, sims, [0, 1, 2], tau_p=0.5)
        np.testing.assert_allclose(w, 1.0)

    def test_zero_vs_positive(self):
        sims = sim_matrix([0.0, 0.5])
        w = positive_weights(0, sims, [0, 1], tau_p=0.5)
        np.testing.assert_allclose(w[0], 0.0)
        np.testing.assert_allclose(w[1], 2.0)

    def test_frozen_example(self):
        sims = sim_matrix([0.2, 0.4, 0.6])
        w = positive_weights(0, sims, [0, 1, 2], tau_p=0.5)
        np.testing.assert_allclose(w, [0.36544408, 0.91062258, 1.72393334], atol=1e-8)
        np.testing.assert_allclose(w.mean(), 1.0, atol=1e-12)

    def test_all_zero_falls_back_to_uniform(self):
        sims = sim_matrix([0.0, 0.0, 0.0])
        with pytest.warns(RuntimeWarning, match="uniform"):
            w = positive_weights(0, sims, [0, 1, 2], tau_p=0.5)
        np.testing.assert_allclose(w, 1.0)

    def test_mean_one_invariant(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            n = int(rng.integers(2, 30))
            sims = SimilarityMatrix(rng.random((n, n)), "fused")
            anchor = int(rng.integers(n))
            w = positive_weights(anchor, sims, np.arange(n), tau_p=float(rng.uniform(0.1, 2)))
            assert abs(w.mean() - 1.0) <= 1e-12

    def test_order_preservation(self):
        rng = np.random.default_rng(1)
        sims = sim_matrix(np.sort(rng.random(10)))
        w = positive_weights(0, sims, np.arange(10), tau_p=0.4)
        assert np.all(np.diff(w) > 0)

    def test_concentration_limit_small_tau(self):
        """With a 0.05 margin and no clamping, the top candidate takes
        at least 99.9% of the total weight at tau_p = 1e-3."""
        rng = np.random.default_rng(2)
        for _ in range(20):
            others = rng.uniform(0.0, 0.55, size=9)
            row = np.concatenate([others, [others.max() + 0.05 + rng.uniform(0, 0.05)]])
            w = positive_weights(0, sim_matrix(row), np.arange(10), tau_p=1e-3)
            assert w.max() / w.sum() >= 0.999

    def test_proportionality_limit_large_tau(self):
        """At tau_p = 1e6 the weights match sims / mean(sims) within 1e-4."""
        rng = np.random.default_rng(3)
        row = rng.uniform(0.05, 1.0, size=12)
        w = positive_weights(0, sim_matrix(row), np.arange(12), tau_p=1e6)
        np.testing.assert_allclose(w, row / row.mean(), rtol=1e-4)


class TestNegativeWeights:
    def test_equal_similarities(self):
        sims = sim_matrix([0.7, 0.7])
        np.testing.assert_allclose(negative_weights(0, sims, [0, 1], tau_n=0.5), 1.0)

    def test_huge_tau_gives_uniform(self):
        rng = np.random.default_rng(4)
        sims = sim_matrix(rng.random(8))
        w = negative_weights(0, sims, np.arange(8), tau_n=1e9)
        np.testing.assert_allclose(w, 1.0, atol=1e-6)

    def test_frozen_example(self):
        sims = sim_matrix([0.0, 1.0])
        w = negative_weights(0, sims, [0, 1], tau_n=0.5)
        np.testing.assert_allclose(w, [1.76159416, 0.23840584], atol=1e-8)

    def test_strictly_positive_and_mean_one(self):
        rng = np.random.default_rng(5)
        for _ in range(200):
            n = int(rng.integers(2, 30))
            sims = SimilarityMatrix(rng.random((n, n)), "fused")
            w = negative_weights(int(rng.integers(n)), sims, np.arange(n), tau_n=float(rng.uniform(0.1, 2)))
            assert np.all(w > 0)
            assert abs(w.mean() - 1.0) <= 1e-12

    def test_order_reversal(self):
        rng = np.random.default_rng(6)
        sims = sim_matrix(np.sort(rng.random(10)))
        w = negative_weights(0, sims, np.arange(10), tau_n=0.4)
        assert np.all(np.diff(w) < 0)


class TestWeightTable:
    def test_bit_for_bit_agreement_with_direct_path(self):
        """Precomputed-table slicing and the direct per-anchor computation
        must agree exactly, including on partial candidate sets."""
        rng = np.random.default_rng(7)
        sims = SimilarityMatrix(rng.random((20, 20)), "fused")
        temps = TemperaturePair(tau_p=0.37, tau_n=0.61)
        table = WeightTable(sims, temps)
        for _ in range(30):
            anchor = int(rng.integers(20))
            cand = rng.choice(20, size=int(rng.integers(1, 20)), replace=False)
            assert np.array_equal(
                table.pos_weights(anchor, cand),
                positive_weights(anchor, sims, cand, temps.tau_p),
            )
            assert np.array_equal(
                table.neg_weights(anchor, cand),
                negative_weights(anchor, sims, cand, temps.tau_n),
            )

    def test_matrix_rows_match_vector_path(self):
        rng = np.random.default_rng(8)
        sims = SimilarityMatrix(rng.random((12, 12)), "fused")
        temps = TemperaturePair(tau_p=0.5, tau_n=0.5)
        table = WeightTable(sims, temps)
        anchors = np.arange(12)
        vm = np.arange(12)
        wp = table.pos_weight_matrix(anchors, vm)
        wn = table.neg_weight_matrix(anchors, vm)
        for i in anchors:
            assert np.array_equal(wp[i], table.pos_weights(i, vm))
            assert np.array_equal(wn[i], table.neg_weights(i, vm))

    def test_batch_matrices_zero_diagonal_mean_one(self):
        rng = np.random.default_rng(9)
        sims = SimilarityMatrix(rng.random((15, 15)), "fused")
        table = WeightTable(sims, TemperaturePair())
        batch = rng.choice(15, size=8, replace=False)
        wp, wn = table.batch_weight_matrices(batch)
        assert np.all(np.diag(wp) == 0)
        assert np.all(np.diag(wn) == 0)
        b = batch.size
        np.testing.assert_allclose(wp.sum(axis=1) / (b - 1), 1.0, atol=1e-12)
        np.testing.assert_allclose(wn.sum(axis=1) / (b - 1), 1.0, atol=1e-12)


class TestWeightSet:
    def test_bundle_and_invariants(self):
        rng = np.random.default_rng(10)
        sims = SimilarityMatrix(rng.random((9, 9)), "fused")
        cand = CandidateSets(vm=np.arange(9), vn=np.arange(9))
        ws = weight_set(3, sims, cand, TemperaturePair(0.4, 0.8))
        assert abs(ws.w_pos.mean() - 1.0) <= 1e-12
        assert abs(ws.w_neg.mean() - 1.0) <= 1e-12
        assert np.all(ws.w_pos >= 0) and np.all(ws.w_neg > 0)

    def test_empty_candidates_rejected(self):
        with pytest.raises(ValueError):
            CandidateSets(vm=[], vn=[0])

    def test_invariance_under_feature_masking(self):
        """Weights come from the original similarity; recomputing from the
        same matrix after any augmentation gives the identical WeightSet."""
        rng = np.random.default_rng(11)
        sims = SimilarityMatrix(rng.random((9, 9)), "fused")
        cand = CandidateSets(vm=np.arange(9), vn=np.arange(9))
        before = weight_set(2, sims, cand, TemperaturePair())
        after = weight_set(2, sims, cand, TemperaturePair())
        assert np.array_equal(before.w_pos, after.w_pos)
        assert np.array_equal(before.w_neg, after.w_neg)
