"""Edge dropping, feature masking, and two-view generation."""

import numpy as np

from gclkit.augmentation import AugmentConfig, drop_edges, make_view, make_views, mask_features
from gclkit.rng import rng_from
from tests.test_graph import random_graph


class TestDropEdges:
    def test_p_zero_keeps_everything(self):
        rng = np.random.default_rng(0)
        g = random_graph(rng, 30)
        out = drop_edges(g, 0.0, rng_from(0, "t"))
        assert np.array_equal(out.edges, g.edges)

    def test_p_one_removes_everything(self):
        rng = np.random.default_rng(1)
        g = random_graph(rng, 30)
        out = drop_edges(g, 1.0, rng_from(0, "t"))
        assert out.num_edges == 0
        assert out.n == g.n

    def test_binomial_survivor_count(self):
        """1000 edges at p=0.3: survivors within 3 sigma of 700."""
        edges = [(i, i + 1) for i in range(1000)]
        g = __import__("gclkit").build_graph(edges, 1001)
        assert g.num_edges == 1000
        out = drop_edges(g, 0.3, rng_from(123, "edges"))
        sigma = np.sqrt(1000 * 0.3 * 0.7)
        assert abs(out.num_edges - 700) <= 3 * sigma

    def test_deterministic(self):
        rng = np.random.default_rng(2)
        g = random_graph(rng, 40)
        a = drop_edges(g, 0.4, rng_from(7, "e"))
        b = drop_edges(g, 0.4, rng_from(7, "e"))
        assert np.array_equal(a.edges, b.edges)

    def test_edge_subset_and_symmetry(self):
        rng = np.random.default_rng(3)
        g = random_graph(rng, 25)
        out = drop_edges(g, 0.5, rng_from(9, "e"))
        original = set(map(tuple, g.edges))
        assert all(tuple(e) in original for e in out.edges)
        assert np.all((out.adj - out.adj.T).toarray() == 0)


class TestMaskFeatures:
    def test_p_zero_identity(self):
        x = np.arange(12, dtype=float).reshape(3, 4)
        out = mask_features(x, 0.0, rng_from(0, "f"))
        assert np.array_equal(out, x)

    def test_p_one_zeroes_everything(self):
        x = np.ones((3, 4))
        out = mask_features(x, 1.0, rng_from(0, "f"))
        assert np.all(out == 0)

    def test_binomial_column_count(self):
        """d=500 at p=0.2: zeroed columns within 3 sigma of 100."""
        x = np.ones((4, 500))
        out = mask_features(x, 0.2, rng_from(42, "f"))
        zeroed = int((out[0] == 0).sum())
        sigma = np.sqrt(500 * 0.2 * 0.8)
        assert abs(zeroed - 100) <= 3 * sigma

    def test_mask_shared_across_rows(self):
        rng = np.random.default_rng(4)
        x = rng.standard_normal((10, 50)) + 5.0  # keep entries away from 0
        out = mask_features(x, 0.4, rng_from(5, "f"))
        zero_cols = np.all(out == 0, axis=0)
        nonzero_cols = np.all(out != 0, axis=0)
        assert np.all(zero_cols | nonzero_cols)


class TestMakeViews:
    def test_no_perturbation_reproduces_input(self):
        rng = np.random.default_rng(5)
        g = random_graph(rng, 20)
        x = rng.standard_normal((20, 6))
        cfg = AugmentConfig(p_edge=0.0, p_feat=0.0, seed=1)
        v1, v2 = make_views(g, x, cfg, cfg)
        assert np.array_equal(v1.graph.edges, g.edges)
        assert np.array_equal(v2.features, x)

    def test_reproducible_pair(self):
        rng = np.random.default_rng(6)
        g = random_graph(rng, 20)
        x = rng.standard_normal((20, 6))
        c1 = AugmentConfig(0.3, 0.3, seed=11)
        c2 = AugmentConfig(0.2, 0.4, seed=12)
        a1, a2 = make_views(g, x, c1, c2)
        b1, b2 = make_views(g, x, c1, c2)
        assert np.array_equal(a1.graph.edges, b1.graph.edges)
        assert np.array_equal(a1.features, b1.features)
        assert np.array_equal(a2.graph.edges, b2.graph.edges)
        assert np.array_equal(a2.features, b2.features)

    def test_extreme_rates(self):
        rng = np.random.default_rng(7)
        g = random_graph(rng, 15)
        x = rng.standard_normal((15, 3))
        v1, v2 = make_views(g, x, AugmentConfig(1.0, 0.0, seed=1), AugmentConfig(0.0, 0.0, seed=2))
        assert v1.graph.num_edges == 0
        assert np.array_equal(v2.graph.edges, g.edges)

    def test_node_identity_preserved(self):
        rng = np.random.default_rng(8)
        g = random_graph(rng, 15)
        x = rng.standard_normal((15, 3))
        v = make_view(g, x, AugmentConfig(0.5, 0.5, seed=3))
        assert v.graph.n == g.n
        assert v.features.shape == x.shape
        # surviving feature columns are untouched, so rows still line up
        kept = np.flatnonzero(np.any(v.features != 0, axis=0))
        assert np.array_equal(v.features[:, kept], x[:, kept])

    def test_independent_streams_for_edges_and_features(self):
        rng = np.random.default_rng(9)
        g = random_graph(rng, 30)
        x = rng.standard_normal((30, 40))
        a = make_view(g, x, AugmentConfig(0.5, 0.0, seed=4))
        b = make_view(g, x, AugmentConfig(0.5, 0.9, seed=4))
        # changing the feature rate must not change the edge stream
        assert np.array_equal(a.graph.edges, b.graph.edges)
