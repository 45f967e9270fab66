"""Forward-pass oracles, hand-written backward passes, Adam, checkpoints.

The gradient checks here chain every loss through the full network stack
(propagation, ReLU, both row normalizations) and compare against central
finite differences at 1e-5 in float64; the acceptance threshold is a max
relative error of 1e-4 over at least 200 random coordinates.
"""

import numpy as np
import pytest

from gclkit.data import SbmSpec, gen_sbm
from gclkit.errors import NumericalError
from gclkit.graph import build_graph, normalized_adjacency
from gclkit.nn import (
    ParamStore,
    adam_step,
    backward,
    gcn_backward,
    gcn_forward,
    grad_check,
    init_gcn_params,
    init_mlp_params,
    load_checkpoint,
    mlp_backward,
    mlp_forward,
    row_normalize,
    row_normalize_backward,
    save_checkpoint,
)
from gclkit.objectives import (
    combined_loss,
    cross_entropy,
    enhanced_loss,
    ideal_loss,
    infonce,
    nc_loss,
    sampled_ideal_loss,
)
from tests.test_graph import random_graph


def small_instance(seed=0, n=20, d_in=6, d1=5, d2=4):
    rng = np.random.default_rng(seed)
    g = random_graph(rng, n, p=0.25)
    x = rng.standard_normal((n, d_in))
    a = normalized_adjacency(g, add_self_loops=True)
    params = init_gcn_params(d_in, d1, d2, rng)
    return g, a, x, params


class TestGcnForward:
    def test_matches_straight_line_reimplementation(self):
        """Independent dense-matrix re-derivation agrees to 1e-12."""
        _, a, x, params = small_instance(seed=1)
        z, trace = gcn_forward(a, x, params)
        w = params.params
        dense = a.dense()

        def norm_rows(m):
            lens = np.sqrt((m * m).sum(axis=1))
            out = m.copy()
            nz = lens > 0
            out[nz] = m[nz] / lens[nz, None]
            return out

        h = norm_rows(dense @ np.maximum(dense @ x @ w["W1"], 0) @ w["W2"])
        z_ref = norm_rows(np.maximum(h @ w["U1"], 0) @ w["U2"])
        np.testing.assert_allclose(z, z_ref, atol=1e-12)
        np.testing.assert_allclose(trace.tensors["H"], h, atol=1e-12)

    def test_zero_second_layer_maps_to_zero_without_nan(self):
        _, a, x, params = small_instance(seed=2)
        params.params["W2"][:] = 0.0
        z, trace = gcn_forward(a, x, params)
        assert np.all(trace.tensors["H"] == 0.0)
        assert np.all(z == 0.0)
        assert np.all(np.isfinite(z))

    def test_single_node_identity_fixed_point(self):
        g = build_graph([], 1)
        a = normalized_adjacency(g, add_self_loops=True)
        params = ParamStore(
            params={"W1": np.eye(2), "W2": np.eye(2), "U1": np.eye(2), "U2": np.eye(2)}
        )
        x = np.array([[1.0, 0.0]])
        z, trace = gcn_forward(a, x, params)
        np.testing.assert_allclose(trace.tensors["H"], [[1.0, 0.0]], atol=1e-15)
        np.testing.assert_allclose(z, [[1.0, 0.0]], atol=1e-15)

    def test_output_rows_unit_or_zero(self):
        _, a, x, params = small_instance(seed=3)
        z, trace = gcn_forward(a, x, params)
        for mat in (z, trace.tensors["H"]):
            norms = np.linalg.norm(mat, axis=1)
            assert np.all((norms == 0) | (np.abs(norms - 1.0) <= 1e-9))

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_nonfinite_input_aborts(self):
        _, a, x, params = small_instance(seed=4)
        x[0, 0] = np.inf
        with pytest.raises(NumericalError):
            gcn_forward(a, x, params)


class TestMlpForward:
    def test_zero_weights_give_uniform_softmax(self):
        rng = np.random.default_rng(5)
        params = init_mlp_params(4, 3, 3, 5, rng)
        for w in params.params.values():
            w[:] = 0.0
        x = rng.standard_normal((6, 4))
        _, trace = mlp_forward(x, params)
        logits = trace.tensors["logits"]
        assert np.all(logits == 0.0)
        soft = np.exp(logits) / np.exp(logits).sum(axis=1, keepdims=True)
        np.testing.assert_allclose(soft, 1.0 / 5.0)

    def test_linear_layer_matches_matrix_product(self):
        """With an identity first layer and nonnegative inputs the trunk is
        a single matrix product."""
        rng = np.random.default_rng(6)
        x = np.abs(rng.standard_normal((7, 4)))
        params = init_mlp_params(4, 4, 3, 2, rng)
        params.params["V1"] = np.eye(4)
        _, trace = mlp_forward(x, params)
        np.testing.assert_allclose(trace.tensors["E"], x @ params.params["V2"], atol=1e-12)
        np.testing.assert_allclose(
            trace.tensors["logits"], x @ params.params["V2"] @ params.params["V3"], atol=1e-12
        )

    def test_row_permutation_equivariance(self):
        rng = np.random.default_rng(7)
        params = init_mlp_params(5, 4, 3, 2, rng)
        x = rng.standard_normal((8, 5))
        perm = rng.permutation(8)
        z1, tr1 = mlp_forward(x, params)
        z2, tr2 = mlp_forward(x[perm], params)
        np.testing.assert_allclose(z2, z1[perm], atol=1e-14)
        np.testing.assert_allclose(tr2.tensors["logits"], tr1.tensors["logits"][perm], atol=1e-14)


class TestRowNormalize:
    def test_tangent_projector_at_basis_vectors(self):
        """At a unit basis vector the Jacobian is I - e e^T."""
        for i in range(3):
            x = np.zeros((1, 3))
            x[0, i] = 1.0
            _, norms = row_normalize(x)
            for j in range(3):
                g = np.zeros((1, 3))
                g[0, j] = 1.0
                expected = g[0] - x[0] * (x[0] @ g[0])
                np.testing.assert_allclose(
                    row_normalize_backward(g, x, norms)[0], expected, atol=1e-15
                )

    def test_zero_row_zero_gradient(self):
        x = np.zeros((2, 3))
        x[1] = [3.0, 0.0, 0.0]
        y, norms = row_normalize(x)
        assert np.all(y[0] == 0.0)
        g = np.ones((2, 3))
        out = row_normalize_backward(g, x, norms)
        assert np.all(out[0] == 0.0)
        assert np.all(np.isfinite(out))


class TestBackwardZeroUpstream:
    def test_gcn_zero_upstream_gives_zero_grads(self):
        _, a, x, params = small_instance(seed=8)
        z, trace = gcn_forward(a, x, params)
        grads = gcn_backward(trace, np.zeros_like(z), params)
        for g in grads.values():
            assert np.all(g == 0.0)

    def test_backward_dispatch(self):
        _, a, x, params = small_instance(seed=9)
        z, trace = gcn_forward(a, x, params)
        grads = backward(trace, np.zeros_like(z), params)
        assert set(grads) == {"W1", "W2", "U1", "U2"}


class TestGradCheckHarness:
    def test_quadratic_probe_is_exact(self):
        """0.5 * ||W||^2 has a linear gradient; central differences are
        exact to roundoff."""
        rng = np.random.default_rng(10)
        params = ParamStore(params={"W": rng.standard_normal((5, 4))})

        def closure(p):
            w = p.params["W"]
            return 0.5 * float((w * w).sum()), {"W": w.copy()}

        assert grad_check(closure, params) <= 1e-9


def gcn_closure(loss_on_z, a, x):
    def closure(params):
        z, trace = gcn_forward(a, x, params)
        value, d_z = loss_on_z(z)
        return value, gcn_backward(trace, d_z, params)

    return closure


class TestLossGradientsThroughNetwork:
    """Every objective chained through the full encoder stack, against
    central finite differences: max relative error at most 1e-4."""

    def setup_method(self):
        spec = SbmSpec(block_sizes=(7, 7, 6), p_in=0.4, p_out=0.08, feat_dim=6, seed=3)
        self.g, self.x, self.y = gen_sbm(spec)
        self.a = normalized_adjacency(self.g, add_self_loops=True)
        rng = np.random.default_rng(11)
        self.params = init_gcn_params(6, 5, 4, rng)
        self.rng = rng

    def test_infonce_through_gcn(self):
        def loss_on_z(z):
            res = infonce(z[0], z[1], z[2:8], tau=0.6)
            d_z = np.zeros_like(z)
            d_z[0] += res.grads["anchor"]
            d_z[1] += res.grads["positive"]
            d_z[2:8] += res.grads["negatives"]
            return res.value, d_z

        err = grad_check(gcn_closure(loss_on_z, self.a, self.x), self.params, rng=self.rng)
        assert err <= 1e-4

    def test_ideal_through_gcn(self):
        def loss_on_z(z):
            res = ideal_loss(z, self.y, anchor=2, counterpart_emb=z[2], tau=0.7)
            d_z = res.grads["embeddings"].copy()
            d_z[2] += res.grads["counterpart"]
            return res.value, d_z

        err = grad_check(gcn_closure(loss_on_z, self.a, self.x), self.params, rng=self.rng)
        assert err <= 1e-4

    def test_sampled_through_gcn(self):
        def loss_on_z(z):
            res = sampled_ideal_loss(z[0], z[1], z[2:6], z[6:12], l=2.0, q=1.5, tau=0.8)
            d_z = np.zeros_like(z)
            d_z[0] += res.grads["anchor"]
            d_z[1] += res.grads["counterpart"]
            d_z[2:6] += res.grads["positives"]
            d_z[6:12] += res.grads["negatives"]
            return res.value, d_z

        err = grad_check(gcn_closure(loss_on_z, self.a, self.x), self.params, rng=self.rng)
        assert err <= 1e-4

    def test_enhanced_through_gcn(self):
        rng = np.random.default_rng(12)
        wp = rng.random(10) + 0.05
        wn = rng.random(10) + 0.05
        wp /= wp.mean()
        wn /= wn.mean()

        def loss_on_z(z):
            res = enhanced_loss(z[0], z[0], z[1:11], wp, z[5:15], wn, tau=0.5)
            d_z = np.zeros_like(z)
            d_z[0] += res.grads["anchor"] + res.grads["counterpart"]
            d_z[1:11] += res.grads["positives"]
            d_z[5:15] += res.grads["negatives"]
            return res.value, d_z

        err = grad_check(gcn_closure(loss_on_z, self.a, self.x), self.params, rng=self.rng)
        assert err <= 1e-4

    def test_nc_through_mlp_with_skips(self):
        a_r = np.linalg.matrix_power(self.a.dense(), 2)
        a_r[:, 5:] = 0.0  # force some anchors to have no positives
        a_r[5:, :] = 0.0
        params = init_mlp_params(6, 5, 4, 3, np.random.default_rng(13))
        batch = np.arange(self.g.n)

        def closure(p):
            z, trace = mlp_forward(self.x, p)
            res = nc_loss(z, batch, a_r, tau=0.6)
            assert res.skipped > 0
            return res.value, mlp_backward(trace, res.grads["embeddings"], p)

        assert grad_check(closure, params, rng=self.rng) <= 1e-4

    def test_combined_through_mlp(self):
        a_r = np.linalg.matrix_power(self.a.dense(), 2)
        params = init_mlp_params(6, 5, 4, 3, np.random.default_rng(14))
        batch = np.arange(self.g.n)
        train_idx = np.arange(0, self.g.n, 3)

        def closure(p):
            z, trace = mlp_forward(self.x, p)
            ce = cross_entropy(trace.tensors["logits"], self.y, train_idx)
            nc = nc_loss(z, batch, a_r, tau=0.6)
            total = combined_loss(ce, nc, lambda_nc=0.7)
            return total.value, mlp_backward(
                trace, total.grads["embeddings"], p, total.grads["logits"]
            )

        assert grad_check(closure, params, rng=self.rng) <= 1e-4


class TestAdam:
    def test_zero_gradient_leaves_parameters(self):
        rng = np.random.default_rng(15)
        params = ParamStore(params={"W": rng.standard_normal((3, 3))})
        before = params.params["W"].copy()
        adam_step(params, {"W": np.zeros((3, 3))}, lr=0.1)
        np.testing.assert_allclose(params.params["W"], before)
        assert params.adam_t == 1

    def test_first_step_magnitude(self):
        """Scalar parameter, constant unit gradient: bias-corrected first
        step is -lr up to epsilon."""
        params = ParamStore(params={"w": np.array([[2.0]])})
        adam_step(params, {"w": np.array([[1.0]])}, lr=0.1)
        np.testing.assert_allclose(params.params["w"], [[1.9]], atol=1e-8)

    def test_deterministic(self):
        rng = np.random.default_rng(16)
        w = rng.standard_normal((4, 2))
        g = rng.standard_normal((4, 2))
        p1 = ParamStore(params={"W": w.copy()})
        p2 = ParamStore(params={"W": w.copy()})
        for _ in range(5):
            adam_step(p1, {"W": g}, lr=0.05)
            adam_step(p2, {"W": g}, lr=0.05)
        assert np.array_equal(p1.params["W"], p2.params["W"])

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_nonfinite_update_aborts(self):
        params = ParamStore(params={"W": np.ones((2, 2))})
        with pytest.raises(NumericalError):
            adam_step(params, {"W": np.full((2, 2), np.inf)}, lr=0.1)


class TestCheckpoints:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(17)
        params = init_gcn_params(6, 5, 4, rng)
        path = tmp_path / "model.ckpt"
        save_checkpoint(path, params, config_hash="abc123")
        loaded, digest = load_checkpoint(path)
        assert digest == "abc123"
        assert set(loaded.params) == set(params.params)
        for name in params.params:
            assert np.array_equal(loaded.params[name], params.params[name])

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "junk.ckpt"
        path.write_bytes(b"XXXX" + b"\x00" * 32)
        with pytest.raises(ValueError, match="not a checkpoint"):
            load_checkpoint(path)
