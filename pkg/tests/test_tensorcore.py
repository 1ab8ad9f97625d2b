import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from feedbackml import tensorcore as tc
from feedbackml.tensorcore import Tensor, parameter, precision

F64 = np.float64


def weighted_sum(out: Tensor, weights: np.ndarray) -> Tensor:
    return (out * Tensor(weights)).sum()


def assert_grads_ok(fn, params, tol=1e-4):
    worst = tc.check_gradients(fn, params)
    assert max(worst.values()) < tol, worst


# -- embedding -----------------------------------------------------------------

def test_embedding_pad_row_lookup():
    m = Tensor(np.vstack([np.zeros(3), np.arange(3.0), np.ones(3)]))
    out = tc.embedding_lookup(m, np.array([[0]]))
    assert out.shape == (1, 1, 3)
    assert np.all(out.data == 0)


def test_embedding_reference_shape():
    m = Tensor(np.zeros((20, 300)))
    out = tc.embedding_lookup(m, np.zeros((8, 255), dtype=int))
    assert out.shape == (8, 255, 300)


def test_embedding_rejects_out_of_range():
    m = Tensor(np.zeros((3, 2)))
    with pytest.raises(IndexError, match="out of range"):
        tc.embedding_lookup(m, np.array([[3]]))


def test_embedding_duplicate_ids_sum_gradients():
    with precision(F64):
        rng = np.random.default_rng(0)
        m = parameter(rng.normal(size=(3, 4)), name="emb")
        ids = np.array([[2, 1, 2]])
        w = rng.normal(size=(1, 3, 4))
        fn = lambda: weighted_sum(tc.embedding_lookup(m, ids), w)  # noqa: E731
        tc.backward(fn(), [m])
        np.testing.assert_allclose(m.grad[2], w[0, 0] + w[0, 2])
        np.testing.assert_allclose(m.grad[1], w[0, 1])
        # PAD row 0 never used here, so FD agrees everywhere
        numeric = tc.numerical_gradient(fn, m)
        assert tc.relative_error(m.grad, numeric).max() < 1e-4


def test_embedding_pad_row_gradient_forced_zero():
    with precision(F64):
        m = parameter(np.ones((3, 2)))
        out = tc.embedding_lookup(m, np.array([[0, 1]]))
        tc.backward(out.sum(), [m])
        assert np.all(m.grad[0] == 0)
        assert np.all(m.grad[1] == 1)


# -- conv1d --------------------------------------------------------------------

def sliding_conv_oracle(x, k, b):
    batch, length, _ = x.shape
    c_out, width, _ = k.shape
    out = np.zeros((batch, length - width + 1, c_out))
    for n in range(batch):
        for t in range(length - width + 1):
            for c in range(c_out):
                out[n, t, c] = np.sum(x[n, t:t + width, :] * k[c]) + b[c]
    return out


def test_conv1d_hand_example():
    x = Tensor(np.array([1.0, 2, 3, 4]).reshape(1, 4, 1))
    k = Tensor(np.array([1.0, 0, -1]).reshape(1, 3, 1))
    out = tc.conv1d(x, k, Tensor(np.zeros(1)))
    np.testing.assert_array_equal(out.data.reshape(-1), [-2.0, -2.0])


def test_conv1d_zero_kernel_relu():
    x = Tensor(np.random.default_rng(1).normal(size=(2, 6, 3)))
    out = tc.conv1d(x, Tensor(np.zeros((4, 2, 3))), Tensor(np.zeros(4)), "relu")
    assert out.shape == (2, 5, 4)
    assert np.all(out.data == 0)


def test_conv1d_matches_sliding_oracle():
    rng = np.random.default_rng(2)
    with precision(F64):
        x, k, b = rng.normal(size=(3, 9, 4)), rng.normal(size=(5, 3, 4)), rng.normal(size=5)
        out = tc.conv1d(Tensor(x), Tensor(k), Tensor(b))
        np.testing.assert_allclose(out.data, sliding_conv_oracle(x, k, b), rtol=1e-12, atol=1e-12)


def test_conv1d_short_sequence_error_names_both():
    with pytest.raises(ValueError, match=r"L=3.*K=5"):
        tc.conv1d(Tensor(np.zeros((1, 3, 2))), Tensor(np.zeros((1, 5, 2))))


def test_conv1d_gradients():
    rng = np.random.default_rng(3)
    with precision(F64):
        x = parameter(rng.normal(size=(2, 6, 3)), "x")
        k = parameter(rng.normal(size=(4, 3, 3)), "k")
        b = parameter(rng.normal(size=4), "b")
        w = rng.normal(size=(2, 4, 4))
        assert_grads_ok(lambda: weighted_sum(tc.conv1d(x, k, b), w), [x, k, b])


# -- pooling -------------------------------------------------------------------

def test_global_max_pool_values_and_tie_rule():
    with precision(F64):
        x = parameter(np.array([[[1.0], [5.0], [3.0]]]))
        out = tc.global_max_pool1d(x)
        assert out.data.item() == 5.0
        y = parameter(np.array([[[2.0], [2.0], [2.0]]]))
        pooled = tc.global_max_pool1d(y)
        tc.backward(pooled.sum(), [y])
        np.testing.assert_array_equal(y.grad.reshape(-1), [1.0, 0.0, 0.0])


def test_global_max_pool_brute_force_oracle():
    x = np.random.default_rng(4).normal(size=(2, 7, 4))
    out = tc.global_max_pool1d(Tensor(x)).data
    for b in range(2):
        for c in range(4):
            assert out[b, c] == max(float(v) for v in np.asarray(x[b, :, c], dtype=np.float32))


@settings(max_examples=40, deadline=None)
@given(hnp.arrays(np.float64, (2, 5, 3), elements=st.floats(-10, 10)), st.randoms())
def test_global_max_pool_permutation_invariant(x, rnd):
    perm = list(range(5))
    rnd.shuffle(perm)
    a = tc.global_max_pool1d(Tensor(x)).data
    b = tc.global_max_pool1d(Tensor(x[:, perm])).data
    np.testing.assert_array_equal(a, b)


def test_global_max_pool_gradients():
    with precision(F64):
        x = parameter(np.random.default_rng(5).normal(size=(2, 7, 4)), "x")
        w = np.random.default_rng(6).normal(size=(2, 4))
        assert_grads_ok(lambda: weighted_sum(tc.global_max_pool1d(x), w), [x])


# -- dense & activations -------------------------------------------------------

def test_dense_identity():
    x = Tensor(np.arange(6.0).reshape(2, 3))
    out = tc.dense(x, Tensor(np.eye(3)), Tensor(np.zeros(3)))
    np.testing.assert_array_equal(out.data, x.data)


def test_dense_relu_negative_is_zero():
    out = tc.dense(Tensor([[1.0]]), Tensor([[-2.0]]), Tensor([0.0]), "relu")
    assert out.data.item() == 0.0


def test_dense_shape_mismatch():
    with pytest.raises(ValueError, match="shape mismatch"):
        tc.dense(Tensor(np.zeros((2, 3))), Tensor(np.zeros((4, 2))))


@pytest.mark.parametrize("kind", ["linear", "relu", "sigmoid", "tanh", "softmax"])
def test_dense_gradients(kind):
    rng = np.random.default_rng(7)
    with precision(F64):
        x = parameter(rng.normal(size=(3, 5)), "x")
        W = parameter(rng.normal(size=(5, 4)), "W")
        b = parameter(rng.normal(size=4), "b")
        w = rng.normal(size=(3, 4))
        assert_grads_ok(lambda: weighted_sum(tc.dense(x, W, b, kind), w), [x, W, b])


def test_activation_values():
    np.testing.assert_allclose(tc.softmax(Tensor([[0.0, 0.0, 0.0]])).data, [[1 / 3] * 3], rtol=1e-6)
    np.testing.assert_array_equal(tc.activation(Tensor([-2.0, 3.0]), "relu").data, [0.0, 3.0])
    p = tc.softmax(Tensor([[1000.0, 0.0]])).data
    assert np.all(np.isfinite(p))
    np.testing.assert_allclose(p, [[1.0, 0.0]], atol=1e-12)
    assert np.all(np.isfinite(tc.activation(Tensor([-1000.0, 1000.0]), "sigmoid").data))


def test_activation_unknown_kind():
    with pytest.raises(ValueError, match="unknown activation"):
        tc.activation(Tensor([1.0]), "gelu")


@settings(max_examples=60, deadline=None)
@given(hnp.arrays(np.float64, st.tuples(st.integers(1, 4), st.integers(1, 6)),
                  elements=st.floats(-1e6, 1e6)))
def test_softmax_rows_sum_to_one(x):
    p = tc.softmax(Tensor(x)).data
    assert np.all(p >= 0)
    np.testing.assert_allclose(p.sum(axis=-1), 1.0, atol=1e-5)


# -- dropout -------------------------------------------------------------------

def test_dropout_infer_and_rate_zero_are_identity():
    x = Tensor(np.random.default_rng(8).normal(size=(4, 5)))
    assert np.array_equal(tc.dropout(x, 0.5, "infer").data, x.data)
    assert np.array_equal(tc.dropout(x, 0.0, "train", seed=1).data, x.data)
    s = Tensor(np.ones((2, 3, 4)))
    assert np.array_equal(tc.spatial_dropout1d(s, 0.2, "infer").data, s.data)
    assert np.array_equal(tc.spatial_dropout1d(s, 0.0, "train", seed=1).data, s.data)


def test_dropout_rejects_rate_one():
    with pytest.raises(ValueError):
        tc.dropout(Tensor([1.0]), 1.0, "train")
    with pytest.raises(ValueError):
        tc.spatial_dropout1d(Tensor(np.ones((1, 1, 1))), 1.0, "train")


def test_dropout_preserves_mean():
    x = Tensor(np.ones(200_000))
    out = tc.dropout(x, 0.5, "train", seed=123).data
    assert abs(out.mean() - 1.0) < 0.02
    assert set(np.unique(out)) <= {0.0, 2.0}


def test_spatial_dropout_drops_whole_channels():
    x = Tensor(np.ones((1, 7, 10_000)))
    out = tc.spatial_dropout1d(x, 0.2, "train", seed=9).data
    dropped = np.all(out == 0, axis=1)
    kept = np.all(out == 1 / 0.8, axis=1)
    assert np.all(dropped | kept)
    assert abs(dropped.mean() - 0.2) < 0.03


def test_dropout_gradients_use_same_mask():
    with precision(F64):
        x = parameter(np.random.default_rng(10).normal(size=(3, 4)), "x")
        w = np.random.default_rng(11).normal(size=(3, 4))
        assert_grads_ok(lambda: weighted_sum(tc.dropout(x, 0.3, "train", seed=5), w), [x])
        s = parameter(np.random.default_rng(12).normal(size=(2, 3, 4)), "s")
        ws = np.random.default_rng(13).normal(size=(2, 3, 4))
        assert_grads_ok(lambda: weighted_sum(tc.spatial_dropout1d(s, 0.3, "train", seed=5), ws), [s])


# -- LSTM ----------------------------------------------------------------------

def scalar_lstm_step(x, h, c, W, U, b):
    """Per-unit loops, no matrix algebra."""
    sig = lambda v: 1.0 / (1.0 + math.exp(-v))  # noqa: E731
    batch, n_in = x.shape
    hidden = h.shape[1]
    h_new = np.zeros_like(h)
    c_new = np.zeros_like(c)
    for n in range(batch):
        for j in range(hidden):
            pre = []
            for gate in range(4):
                col = gate * hidden + j
                s = b[col]
                for k in range(n_in):
                    s += x[n, k] * W[k, col]
                for k in range(hidden):
                    s += h[n, k] * U[k, col]
                pre.append(s)
            i, f, g, o = sig(pre[0]), sig(pre[1]), math.tanh(pre[2]), sig(pre[3])
            c_new[n, j] = f * c[n, j] + i * g
            h_new[n, j] = o * math.tanh(c_new[n, j])
    return h_new, c_new


def lstm_params(rng, n_in, hidden, scale=0.5, prefix=""):
    return (parameter(rng.normal(scale=scale, size=(n_in, 4 * hidden)), prefix + "W"),
            parameter(rng.normal(scale=scale, size=(hidden, 4 * hidden)), prefix + "U"),
            parameter(rng.normal(scale=scale, size=4 * hidden), prefix + "b"))


def test_lstm_zero_weights():
    z = lambda *s: Tensor(np.zeros(s))  # noqa: E731
    h, c = tc.lstm_cell_step(z(2, 3), z(2, 4), z(2, 4), z(3, 16), z(4, 16), z(16))
    assert np.all(h.data == 0) and np.all(c.data == 0)
    c_prev = Tensor(np.arange(8.0).reshape(2, 4))
    _, c = tc.lstm_cell_step(z(2, 3), z(2, 4), c_prev, z(3, 16), z(4, 16), z(16))
    np.testing.assert_allclose(c.data, 0.5 * c_prev.data)


def test_lstm_step_matches_scalar_oracle():
    rng = np.random.default_rng(14)
    with precision(F64):
        x, h, c = rng.normal(size=(2, 3)), rng.normal(size=(2, 4)), rng.normal(size=(2, 4))
        W, U, b = lstm_params(rng, 3, 4)
        h1, c1 = tc.lstm_cell_step(Tensor(x), Tensor(h), Tensor(c), W, U, b)
        h_ref, c_ref = scalar_lstm_step(x, h, c, W.data, U.data, b.data)
        np.testing.assert_allclose(h1.data, h_ref, rtol=1e-6)
        np.testing.assert_allclose(c1.data, c_ref, rtol=1e-6)


def test_lstm_step_gradients():
    rng = np.random.default_rng(15)
    with precision(F64):
        x = parameter(rng.normal(size=(2, 3)), "x")
        h = parameter(rng.normal(size=(2, 4)), "h")
        c = parameter(rng.normal(size=(2, 4)), "c")
        W, U, b = lstm_params(rng, 3, 4)
        wh, wc = rng.normal(size=(2, 4)), rng.normal(size=(2, 4))

        def fn():
            h1, c1 = tc.lstm_cell_step(x, h, c, W, U, b)
            return weighted_sum(h1, wh) + weighted_sum(c1, wc)

        assert_grads_ok(fn, [x, h, c, W, U, b])


def test_lstm_step_shape_mismatch():
    z = lambda *s: Tensor(np.zeros(s))  # noqa: E731
    with pytest.raises(ValueError):
        tc.lstm_cell_step(z(2, 3), z(2, 4), z(2, 4), z(5, 16), z(4, 16), z(16))


def test_bilstm_unrolled_matches_scalar_steps():
    rng = np.random.default_rng(16)
    with precision(F64):
        x = rng.normal(size=(2, 5, 3))
        fwd, bwd = lstm_params(rng, 3, 2), lstm_params(rng, 3, 2)
        out = tc.bilstm_layer(Tensor(x), fwd, bwd, return_sequences=True).data
        for params, steps, sl in ((fwd, range(5), slice(0, 2)), (bwd, range(4, -1, -1), slice(2, 4))):
            h = np.zeros((2, 2))
            c = np.zeros((2, 2))
            for t in steps:
                h, c = scalar_lstm_step(x[:, t], h, c, *(p.data for p in params))
                np.testing.assert_allclose(out[:, t, sl], h, rtol=1e-6)
        final = tc.bilstm_layer(Tensor(x), fwd, bwd).data
        np.testing.assert_allclose(final, np.concatenate([out[:, -1, :2], out[:, 0, 2:]], axis=1))


def test_bilstm_output_width():
    rng = np.random.default_rng(17)
    x = Tensor(rng.normal(size=(3, 4, 5)))
    fwd, bwd = lstm_params(rng, 5, 2), lstm_params(rng, 5, 2)
    assert tc.bilstm_layer(x, fwd, bwd).shape == (3, 4)
    assert tc.bilstm_layer(x, fwd, bwd, return_sequences=True).shape == (3, 4, 4)


def test_bilstm_palindrome_mirror():
    rng = np.random.default_rng(18)
    with precision(F64):
        half = rng.normal(size=(1, 3, 2))
        x = np.concatenate([half, half[:, ::-1]], axis=1)
        shared = lstm_params(rng, 2, 3)
        out = tc.bilstm_layer(Tensor(x), shared, shared, return_sequences=True).data
        np.testing.assert_allclose(out[:, :, :3], out[:, ::-1, 3:], atol=1e-6)


def test_bilstm_infer_ignores_dropout():
    rng = np.random.default_rng(19)
    x = Tensor(rng.normal(size=(2, 4, 3)))
    fwd, bwd = lstm_params(rng, 3, 2), lstm_params(rng, 3, 2)
    a = tc.bilstm_layer(x, fwd, bwd, dropout=0.2, recurrent_dropout=0.2, mode="infer").data
    b = tc.bilstm_layer(x, fwd, bwd, mode="infer").data
    assert np.array_equal(a, b)


@pytest.mark.parametrize("return_sequences", [True, False])
def test_bilstm_gradients(return_sequences):
    rng = np.random.default_rng(20)
    with precision(F64):
        x = parameter(rng.normal(size=(2, 4, 3)), "x")
        fwd = lstm_params(rng, 3, 2, prefix="f")
        bwd = lstm_params(rng, 3, 2, prefix="r")
        shape = (2, 4, 4) if return_sequences else (2, 4)
        w = rng.normal(size=shape)

        def fn():
            out = tc.bilstm_layer(x, fwd, bwd, return_sequences=return_sequences,
                                  dropout=0.3, recurrent_dropout=0.3, mode="train", seed=4)
            return weighted_sum(out, w)

        assert_grads_ok(fn, [x, *fwd, *bwd])


def test_reverse_lstm_layer_gradients():
    rng = np.random.default_rng(21)
    with precision(F64):
        x = parameter(rng.normal(size=(2, 3, 2)), "x")
        W, U, b = lstm_params(rng, 2, 3)
        w = rng.normal(size=(2, 3))
        assert_grads_ok(lambda: weighted_sum(tc.lstm_layer(x, W, U, b, reverse=True), w), [x, W, U, b])


# -- loss & backward -----------------------------------------------------------

def test_cross_entropy_values():
    p = Tensor(np.full((3, 4), 0.25))
    assert tc.cross_entropy_loss(p, [0, 1, 3]).data.item() == pytest.approx(math.log(4), rel=1e-6)
    one_hot = Tensor(np.eye(3))
    assert tc.cross_entropy_loss(one_hot, [0, 1, 2]).data.item() == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ValueError):
        tc.cross_entropy_loss(p, [0, 1, 4])


def test_fused_softmax_cross_entropy_gradient():
    rng = np.random.default_rng(22)
    with precision(F64):
        logits = parameter(rng.normal(size=(3, 4)), "logits")
        labels = np.array([0, 3, 1])
        fn = lambda: tc.cross_entropy_loss(tc.softmax(logits), labels)  # noqa: E731
        tc.backward(fn(), [logits])
        p = tc.softmax(Tensor(logits.data)).data
        expected = (p - np.eye(4)[labels]) / 3
        np.testing.assert_allclose(logits.grad, expected, rtol=1e-12)
        assert_grads_ok(fn, [logits])


def test_unfused_cross_entropy_gradient():
    rng = np.random.default_rng(23)
    with precision(F64):
        probs = parameter(rng.uniform(0.1, 1.0, size=(2, 3)), "p")
        assert_grads_ok(lambda: tc.cross_entropy_loss(probs, [2, 0]), [probs])


def test_dense_closed_form_gradient():
    rng = np.random.default_rng(24)
    with precision(F64):
        x = rng.normal(size=(4, 3))
        W = parameter(rng.normal(size=(3, 2)), "W")
        delta = rng.normal(size=(4, 2))
        tc.backward(weighted_sum(tc.dense(Tensor(x), W), delta), [W])
        np.testing.assert_allclose(W.grad, x.T @ delta, rtol=1e-12)


def test_disconnected_parameter_zero_grad_and_self_grad():
    with precision(F64):
        a = parameter(np.ones(3))
        unused = parameter(np.ones(2))
        loss = (a * Tensor(np.full(3, 2.0))).sum()
        grads = tc.backward(loss, [a, unused])
        assert loss.grad.item() == 1.0
        np.testing.assert_array_equal(grads[1], np.zeros(2))


def test_backward_accumulates_on_leaves_only():
    with precision(F64):
        a = parameter(np.ones(3))
        loss = (a * Tensor(np.full(3, 2.0))).sum()
        tc.backward(loss, [a])
        tc.backward(loss, [a])
        np.testing.assert_array_equal(a.grad, np.full(3, 4.0))


def test_backward_before_forward_raises():
    with pytest.raises(RuntimeError):
        tc.backward(Tensor(1.0))


def test_topological_order_is_reverse_consistent():
    a = parameter(np.ones(2))
    b = a * Tensor(np.ones(2))
    c = b + a
    loss = c.sum()
    order = tc.topological_order(loss)
    pos = {id(n): k for k, n in enumerate(order)}
    for node in order:
        for parent in node._parents:
            assert pos[id(parent)] < pos[id(node)]


def test_default_dtype_switch():
    assert tc.get_default_dtype() is np.float32
    with precision(np.float64):
        assert Tensor([1.0]).data.dtype == np.float64
    assert Tensor([1.0]).data.dtype == np.float32
