import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import beer.autodiff as ad
from beer.autodiff import MLP, Adam, AdamState, Tape, Tensor, adam_step, no_grad, stop_gradient
from beer.autodiff import functional as F
from beer.autodiff import serialize
from beer.errors import (
    ChecksumError,
    DegenerateVectorError,
    GradientError,
    ShapeError,
    TruncatedCheckpointError,
    VersionMismatchError,
)
from helpers import central_difference, max_relative_error


def grad_of(f, *leaves):
    with Tape() as tape:
        loss = f()
    grads = tape.backward(loss)
    return [grads.get(p) for p in leaves]


class TestLinear:
    def test_identity_weight(self):
        out = F.linear(Tensor([[1.0, 2.0]]), Tensor(np.eye(2)))
        np.testing.assert_array_equal(out.data, [[1.0, 2.0]])

    def test_zero_input_returns_bias(self):
        W = Tensor(np.random.default_rng(0).normal(size=(2, 2)))
        out = F.linear(Tensor([[0.0, 0.0]]), W, Tensor([3.0, 4.0]))
        np.testing.assert_array_equal(out.data, [[3.0, 4.0]])

    def test_hand_multiply(self):
        out = F.linear(Tensor([[1.0, 2.0]]), Tensor([[1.0, 3.0], [2.0, 4.0]]), Tensor([1.0, 1.0]))
        np.testing.assert_array_equal(out.data, [[6.0, 12.0]])

    def test_shape_mismatch_names_both_shapes(self):
        with pytest.raises(ShapeError, match=r"\(1, 3\).*\(2, 2\)"):
            F.linear(Tensor(np.ones((1, 3))), Tensor(np.ones((2, 2))))


class TestReluAndStopGradient:
    def test_relu_forward(self):
        np.testing.assert_array_equal(ad.relu(Tensor([-1.0, 0.0, 2.0])).data, [0.0, 0.0, 2.0])
        assert np.all(ad.relu(Tensor(-np.arange(1.0, 6.0))).data == 0.0)

    @pytest.mark.parametrize("x, expected", [(2.0, 5.0), (-2.0, 0.0), (0.0, 0.0)])
    def test_relu_backward(self, x, expected):
        t = Tensor([x], requires_grad=True)
        (g,) = grad_of(lambda: ad.tsum(ad.relu(t) * 5.0), t)
        assert g[0] == expected

    def test_sg_forward_identity(self):
        x = Tensor([1.0, 2.0, 3.0], requires_grad=True)
        with Tape():
            np.testing.assert_array_equal(stop_gradient(x).data, [1.0, 2.0, 3.0])

    def test_sg_product_rule(self):
        x = Tensor([3.0], requires_grad=True)
        (g,) = grad_of(lambda: ad.tsum(x * stop_gradient(x)), x)
        assert g[0] == 3.0

    def test_sg_square_has_no_gradient(self):
        x = Tensor([1.7], requires_grad=True)
        with Tape() as tape:
            y = stop_gradient(x)
            loss = ad.tsum(y * y)
        assert not loss.tracked
        with pytest.raises(GradientError):
            tape.backward(loss)

    def test_sg_nullity_inside_graph(self):
        rng = np.random.default_rng(3)
        x = Tensor(rng.normal(size=(4, 3)), requires_grad=True)
        W = Tensor(rng.normal(size=(3, 3)), requires_grad=True)

        def f(use_sg):
            h = ad.relu(F.linear(x, W))
            other = stop_gradient(h) if use_sg else Tensor(h.data.copy())
            return ad.tsum(F.row_dot(h, other))

        with Tape():
            a = f(True).data
            b = f(False).data
        assert a == b
        gx_sg, gw_sg = grad_of(lambda: f(True), x, W)
        gx_c, gw_c = grad_of(lambda: f(False), x, W)
        np.testing.assert_array_equal(gx_sg, gx_c)
        np.testing.assert_array_equal(gw_sg, gw_c)


class TestGeometry:
    @given(st.lists(st.floats(-100, 100), min_size=2, max_size=8))
    def test_self_cosine_is_one(self, values):
        u = np.asarray(values)
        if np.linalg.norm(u) <= 1e-3:
            return
        assert abs(F.cosine(Tensor(u), Tensor(u)).item() - 1.0) <= 1e-12

    def test_orthogonal_cosine(self):
        assert F.cosine(Tensor([1.0, 0.0]), Tensor([0.0, 1.0])).item() == 0.0

    def test_norm_gradient(self):
        x = Tensor([3.0, 4.0], requires_grad=True)
        (g,) = grad_of(lambda: F.l2_norm(x), x)
        fd = central_difference(lambda: float(np.linalg.norm(x.data)), x.data)
        np.testing.assert_allclose(g, [0.6, 0.8], atol=1e-12)
        np.testing.assert_allclose(g, fd, atol=1e-9)

    def test_degenerate_cosine_raises(self):
        with pytest.raises(DegenerateVectorError):
            F.cosine(Tensor([0.0, 1e-9]), Tensor([1.0, 0.0]))

    def test_dot_length_mismatch(self):
        with pytest.raises(ShapeError):
            F.dot(Tensor([1.0, 2.0]), Tensor([1.0]))

    @pytest.mark.parametrize("op", ["row_cosine", "row_dot", "row_norm"])
    def test_row_ops_match_finite_differences(self, op):
        rng = np.random.default_rng(11)
        A = Tensor(rng.normal(size=(5, 4)), requires_grad=True)
        B = Tensor(rng.normal(size=(5, 4)), requires_grad=True)
        weights = rng.normal(size=5)

        def f():
            if op == "row_norm":
                out = F.row_norm(A)
            else:
                out = getattr(F, op)(A, B)
            return ad.tsum(out * weights)

        gA, gB = grad_of(f, A, B)
        with no_grad():
            fdA = central_difference(lambda: f().item(), A.data)
            fdB = central_difference(lambda: f().item(), B.data)
        assert max_relative_error(gA, fdA) < 1e-6
        if op != "row_norm":
            assert max_relative_error(gB, fdB) < 1e-6


class TestBackward:
    def test_sum_gives_ones(self):
        x = Tensor(np.random.default_rng(0).normal(size=(3, 2, 4)), requires_grad=True)
        (g,) = grad_of(lambda: ad.tsum(x), x)
        np.testing.assert_array_equal(g, np.ones((3, 2, 4)))

    def test_mse_at_target_is_zero(self):
        x = Tensor([[1.0, -2.0], [0.5, 4.0]], requires_grad=True)
        (g,) = grad_of(lambda: F.mse(x, Tensor(x.data.copy())), x)
        np.testing.assert_array_equal(g, 0.0)

    def test_non_scalar_loss(self):
        x = Tensor([1.0, 2.0], requires_grad=True)
        with Tape() as tape:
            y = x * 2.0
        with pytest.raises(GradientError, match="scalar"):
            tape.backward(y)

    def test_detached_loss(self):
        x = Tensor([1.0], requires_grad=True)
        with Tape() as tape:
            y = ad.tsum(x * 2.0)
        tape.reset()
        with Tape() as other:
            pass
        with pytest.raises(GradientError):
            other.backward(y)
        with pytest.raises(GradientError):
            tape.backward(y)

    def test_repeated_backward_requires_reset(self):
        x = Tensor([1.0], requires_grad=True)
        with Tape() as tape:
            y = ad.tsum(x * x)
        tape.backward(y)
        with pytest.raises(GradientError, match="reset"):
            tape.backward(y)

    def test_reverse_order_visits_every_node_once(self):
        x = Tensor([2.0], requires_grad=True)
        calls = []
        with Tape() as tape:
            y = x * 3.0
            z = y + y
            loss = ad.tsum(z)
        for i, node in enumerate(tape.nodes):
            inner = node.backward

            def wrapped(g, i=i, inner=inner):
                calls.append(i)
                return inner(g)

            node.backward = wrapped
        g = tape.backward(loss)[x]
        assert calls == sorted(calls, reverse=True) == list(range(len(tape.nodes) - 1, -1, -1))
        assert g[0] == 6.0

    def test_mixing_tapes_is_rejected(self):
        x = Tensor([1.0], requires_grad=True)
        with Tape():
            y = x * 2.0
        with Tape():
            with pytest.raises(GradientError):
                _ = y + 1.0

    def test_linearity(self):
        rng = np.random.default_rng(5)
        x = Tensor(rng.normal(size=(3, 3)), requires_grad=True)
        a, b = 0.7, -1.3

        def f():
            return ad.tsum(ad.tanh(x) * x)

        def g():
            return ad.tsum(ad.relu(x) ** 2.0)

        (gf,) = grad_of(f, x)
        (gg,) = grad_of(g, x)
        (gc,) = grad_of(lambda: f() * a + g() * b, x)
        np.testing.assert_allclose(gc, a * gf + b * gg, atol=1e-12, rtol=0)

    def test_broadcast_gradients(self):
        x = Tensor(np.ones((4, 3)), requires_grad=True)
        b = Tensor(np.arange(3.0), requires_grad=True)
        gx, gb = grad_of(lambda: ad.tsum((x + b) * (x / (b + 1.0))), x, b)
        with no_grad():
            fdb = central_difference(lambda: ad.tsum((x + b) * (x / (b + 1.0))).item(), b.data)
        assert max_relative_error(gb, fdb) < 1e-7
        assert gx.shape == (4, 3)

    def test_gather_and_take_rows(self):
        rng = np.random.default_rng(1)
        x = Tensor(rng.normal(size=(4, 3)), requires_grad=True)
        idx = np.array([2, 0, 0, 1])
        w = rng.normal(size=4)

        def f():
            return ad.tsum(F.gather(F.take_rows(x, [3, 3, 1, 0]), idx) * w)

        (g,) = grad_of(f, x)
        with no_grad():
            fd = central_difference(lambda: f().item(), x.data)
        assert max_relative_error(g, fd) < 1e-7

    def test_debug_mode_catches_non_finite(self):
        ad.set_debug(True)
        try:
            with pytest.raises(FloatingPointError), np.errstate(divide="ignore"):
                Tensor([1.0]) / Tensor([0.0])
        finally:
            ad.set_debug(False)


def _random_mlp_case(seed: int):
    rng = np.random.default_rng(seed)
    depth = int(rng.integers(1, 4))
    widths = [int(rng.integers(1, 33)) for _ in range(depth)]
    n_in = int(rng.integers(1, 9))
    n_out = int(rng.integers(1, 5))
    net = MLP([n_in, *widths, n_out], rng)
    x = Tensor(rng.normal(size=(int(rng.integers(1, 7)), n_in)))
    target = rng.normal(size=(x.shape[0], n_out))
    return net, x, target


def _longdouble_mlp_loss(net, x, target):
    """Same loss as ``F.mse(net(x), target)``, evaluated independently in extended precision."""
    h = np.asarray(x.data, dtype=np.longdouble)
    for i, layer in enumerate(net.layers):
        h = h @ layer.weight.data.astype(np.longdouble) + layer.bias.data.astype(np.longdouble)
        if i < len(net.layers) - 1:
            h = np.maximum(h, 0)
    d = h - target.astype(np.longdouble)
    return np.mean(d * d)


@pytest.mark.parametrize("seed", range(100))
def test_mlp_gradients_match_finite_differences(seed):
    net, x, target = _random_mlp_case(seed)
    params = net.parameters()
    grads = grad_of(lambda: F.mse(net(x), target), *params)
    for p, g in zip(params, grads):
        fd = central_difference(lambda: _longdouble_mlp_loss(net, x, target), p.data)
        g = np.zeros_like(fd) if g is None else g
        assert max_relative_error(g, fd) < 1e-4


class TestAdam:
    def test_zero_gradient_leaves_params(self):
        p = Tensor(np.array([1.5, -2.0]), requires_grad=True)
        state = AdamState.zeros_like([p], lr=0.1)
        adam_step([p], [np.zeros(2)], state)
        np.testing.assert_array_equal(p.data, [1.5, -2.0])
        assert state.t == 1

    def test_first_step_hand_value(self):
        p = Tensor(np.array([0.0]), requires_grad=True)
        state = AdamState.zeros_like([p], lr=0.1, beta1=0.9, beta2=0.999, eps_adam=1e-8)
        adam_step([p], [np.array([1.0])], state)
        # m_hat = v_hat = 1 after bias correction
        np.testing.assert_allclose(p.data, [-0.1 / (1.0 + 1e-8)], rtol=0, atol=1e-15)

    def test_matches_closed_form_over_steps(self):
        grads = [0.3, -1.2, 0.8, 0.05]
        p = Tensor(np.array([0.5]), requires_grad=True)
        state = AdamState.zeros_like([p], lr=0.01)
        m = v = 0.0
        ref = 0.5
        for t, g in enumerate(grads, start=1):
            adam_step([p], [np.array([g])], state)
            m = 0.9 * m + 0.1 * g
            v = 0.999 * v + 0.001 * g * g
            ref -= 0.01 * (m / (1 - 0.9**t)) / (np.sqrt(v / (1 - 0.999**t)) + 1e-8)
        np.testing.assert_allclose(p.data, [ref], rtol=1e-14)

    def test_shape_mismatch(self):
        p = Tensor(np.zeros(2), requires_grad=True)
        with pytest.raises(ShapeError):
            adam_step([p], [np.zeros(3)], AdamState.zeros_like([p]))

    def test_deterministic_trajectories(self):
        def run():
            rng = np.random.default_rng(42)
            net = MLP([3, 8, 2], rng)
            opt = Adam(net.parameters(), lr=1e-2)
            x = rng.normal(size=(16, 3))
            y = rng.normal(size=(16, 2))
            for _ in range(20):
                with Tape() as tape:
                    loss = F.mse(net(x), y)
                opt.step(tape.backward(loss))
            return [p.data.copy() for p in net.parameters()]

        for a, b in zip(run(), run()):
            assert a.tobytes() == b.tobytes()

    def test_minimises_quadratic(self):
        w = Tensor(np.array([0.1, -0.2, -0.1]), requires_grad=True)
        x = np.array([0.4, 0.2, -0.5])
        opt = Adam([w], lr=0.2)
        for _ in range(100):
            with Tape() as tape:
                loss = F.mse(w, x)
            opt.step(tape.backward(loss))
        np.testing.assert_allclose(w.data, x, atol=1e-2)


class TestPayload:
    def _arrays(self):
        rng = np.random.default_rng(0)
        return {"a": rng.normal(size=(3, 4)), "b": rng.normal(size=5), "scalar": np.array(2.5)}

    def test_round_trip_is_bit_exact(self, tmp_path):
        arrays = self._arrays()
        path = tmp_path / "p.bin"
        serialize.save(path, arrays, {"step": 7})
        loaded, meta = serialize.load(path)
        assert meta == {"step": 7}
        for k, v in arrays.items():
            assert loaded[k].tobytes() == v.tobytes()
            assert loaded[k].shape == v.shape

    def test_manifest_lists_offsets(self):
        payload = serialize.dumps(self._arrays())
        header = payload.split(b"\n")[1].decode()
        assert '"offset":0' in header and '"offset":96' in header and '"offset":136' in header

    def test_corrupted_blob(self):
        payload = bytearray(serialize.dumps(self._arrays()))
        payload[-3] ^= 0xFF
        with pytest.raises(ChecksumError):
            serialize.loads(bytes(payload))

    def test_truncated_blob(self):
        payload = serialize.dumps(self._arrays())
        with pytest.raises(TruncatedCheckpointError):
            serialize.loads(payload[:-8])

    def test_version_mismatch(self):
        payload = serialize.dumps(self._arrays()).replace(b'"version":1', b'"version":9')
        with pytest.raises(VersionMismatchError):
            serialize.loads(payload)


class TestModules:
    def test_clone_is_independent(self):
        net = MLP([2, 3, 1], np.random.default_rng(0))
        twin = net.clone()
        twin.parameters()[0].data += 1.0
        assert not np.array_equal(net.parameters()[0].data, twin.parameters()[0].data)

    def test_frozen_blocks_parameter_gradients(self):
        net = MLP([2, 3, 1], np.random.default_rng(0))
        x = Tensor(np.ones((1, 2)), requires_grad=True)
        with Tape() as tape:
            with net.frozen():
                loss = ad.tsum(net(x))
        grads = tape.backward(loss)
        assert set(grads) == {x}
        assert all(p.requires_grad for p in net.parameters())

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 10_000))
    def test_state_dict_round_trip(self, seed):
        a = MLP([3, 4, 2], np.random.default_rng(seed))
        b = MLP([3, 4, 2], np.random.default_rng(seed + 1))
        b.load_state_dict(a.state_dict())
        for p, q in zip(a.parameters(), b.parameters()):
            assert p.data.tobytes() == q.data.tobytes()
