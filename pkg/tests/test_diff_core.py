import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adversarial_au import kernels
from adversarial_au.diff_core import (Activation, dense_backward, dense_forward, grad_check,
                                      matmul, sigmoid)
from adversarial_au.errors import DimensionError, NumericError

from oracles import central_difference, naive_matmul, scalar_dense


def test_matmul_identity():
    a = np.array([[1.5, -2.0], [0.25, 3.0]])
    np.testing.assert_array_equal(matmul(np.eye(2), a), a)


def test_matmul_hand_example():
    np.testing.assert_array_equal(matmul([[1, 2], [3, 4]], [[0], [1]]), [[2], [4]])


def test_matmul_matches_triple_loop():
    rng = np.random.default_rng(3)
    a, b = rng.normal(size=(3, 4)), rng.normal(size=(4, 2))
    np.testing.assert_allclose(matmul(a, b), naive_matmul(a.tolist(), b.tolist()), rtol=0, atol=1e-12)


def test_matmul_shape_error_names_both_shapes():
    with pytest.raises(DimensionError, match=r"\(2, 3\).*\(2, 3\)"):
        matmul(np.ones((2, 3)), np.ones((2, 3)))


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 4), st.integers(2, 4), st.integers(2, 4), st.integers(2, 4), st.integers(0, 2**32 - 1))
def test_matmul_associative_with_identity(n, k, p, m, seed):
    rng = np.random.default_rng(seed)
    a, b, c = rng.normal(size=(n, k)), rng.normal(size=(k, p)), rng.normal(size=(p, m))
    np.testing.assert_allclose(matmul(matmul(a, b), c), matmul(a, matmul(b, c)), atol=1e-10)
    np.testing.assert_allclose(matmul(np.eye(n), a), a, atol=1e-10)
    np.testing.assert_allclose(matmul(a, np.eye(k)), a, atol=1e-10)


@pytest.mark.parametrize("act,expected", [(Activation.SIGMOID, 0.5), (Activation.RELU, 0.0)])
def test_dense_forward_zero_layer(act, expected):
    out, cache = dense_forward(np.ones((3, 4)), np.zeros((4, 2)), np.zeros(2), act)
    assert np.all(out == expected)
    assert cache.pre_activation.shape == (3, 2)


@pytest.mark.parametrize("act", list(Activation))
def test_dense_forward_matches_scalar_oracle(act):
    rng = np.random.default_rng(11)
    x, w, b = rng.normal(size=(2, 3)), rng.normal(size=(3, 2)), rng.normal(size=2)
    out, _ = dense_forward(x, w, b, act)
    kind = {Activation.SIGMOID: "sigmoid", Activation.RELU: "relu", Activation.IDENTITY: "id"}[act]
    np.testing.assert_allclose(out, scalar_dense(x.tolist(), w.tolist(), b.tolist(), kind), atol=1e-14)


def test_dense_forward_shape_errors():
    with pytest.raises(DimensionError):
        dense_forward(np.ones((2, 3)), np.ones((4, 2)), np.zeros(2))
    with pytest.raises(DimensionError):
        dense_forward(np.ones((2, 3)), np.ones((3, 2)), np.zeros(5))


def test_dense_backward_zero_grad_out():
    rng = np.random.default_rng(0)
    w = rng.normal(size=(3, 2))
    _, cache = dense_forward(rng.normal(size=(4, 3)), w, rng.normal(size=2), Activation.SIGMOID)
    for g in dense_backward(cache, w, np.zeros((4, 2))):
        assert np.all(g == 0.0)


def test_dense_backward_single_linear_unit():
    x = np.array([[0.7, -1.3]])
    w = np.array([[0.2], [0.5]])
    _, cache = dense_forward(x, w, np.array([0.1]), Activation.IDENTITY)
    grad_in, grad_w, grad_b = dense_backward(cache, w, np.ones((1, 1)))
    np.testing.assert_array_equal(grad_w[:, 0], x[0])
    np.testing.assert_array_equal(grad_b, [1.0])
    np.testing.assert_array_equal(grad_in[0], w[:, 0])


def test_dense_backward_shape_error():
    w = np.ones((3, 2))
    _, cache = dense_forward(np.ones((4, 3)), w, np.zeros(2))
    with pytest.raises(DimensionError):
        dense_backward(cache, w, np.ones((4, 3)))


@pytest.mark.parametrize("act", list(Activation))
def test_dense_backward_matches_finite_differences(act):
    rng = np.random.default_rng(5 + int(act))
    x, w, b = rng.normal(size=(3, 4)), rng.normal(size=(4, 3)), rng.normal(size=3)
    probe = rng.normal(size=(3, 3))

    def scalar_loss(flat):
        flat = np.asarray(flat)
        xx = flat[:12].reshape(3, 4)
        ww = flat[12:24].reshape(4, 3)
        bb = flat[24:]
        out, _ = dense_forward(xx, ww, bb, act)
        return float((out * probe).sum())

    _, cache = dense_forward(x, w, b, act)
    gi, gw, gb = dense_backward(cache, w, probe)
    analytic = np.concatenate([gi.ravel(), gw.ravel(), gb])
    numeric = np.array(central_difference(scalar_loss, np.concatenate([x.ravel(), w.ravel(), b])))
    rel = np.abs(analytic - numeric) / np.maximum(1.0, np.abs(numeric))
    assert rel.max() < 1e-5


def test_grad_check_quadratic():
    p = np.random.default_rng(1).normal(size=10)
    err = grad_check(lambda q: (0.5 * float(q @ q), q.copy()), p, 1e-6)
    assert err < 1e-8


def test_grad_check_catches_wrong_gradient():
    p = np.array([1.0, 2.0])
    assert grad_check(lambda q: (float(q @ q), q.copy()), p) > 0.5


def test_grad_check_rejects_non_finite_loss():
    with pytest.raises(NumericError):
        grad_check(lambda q: (float("nan"), q), np.ones(3))


def test_grad_check_rejects_bad_step():
    with pytest.raises(ValueError):
        grad_check(lambda q: (0.0, q), np.ones(2), step=0.0)


def test_sigmoid_stays_open_interval():
    z = np.array([-1e6, -800.0, -40.0, -1.0, 0.0, 1.0, 40.0, 800.0, 1e6])
    s = sigmoid(z)
    assert np.all(s > 0.0) and np.all(s < 1.0)
    assert s[4] == 0.5


@pytest.mark.skipif(kernels.compiled_backend is None, reason="extension not built")
@pytest.mark.parametrize("act", [0, 1, 2])
def test_backends_agree(act):
    rng = np.random.default_rng(40 + act)
    x, w, b = rng.normal(size=(7, 5)), rng.normal(size=(5, 6)), rng.normal(size=6)
    g = rng.normal(size=(7, 6))
    fast, slow = kernels.compiled_backend, kernels.python_backend
    o1, p1 = fast.dense_forward(x, w, b, act)
    o2, p2 = slow.dense_forward(x, w, b, act)
    np.testing.assert_allclose(o1, o2, rtol=1e-13, atol=1e-14)
    for a, c in zip(fast.dense_backward(x, p1, w, g, act), slow.dense_backward(x, p2, w, g, act)):
        np.testing.assert_allclose(a, c, rtol=1e-13, atol=1e-13)
    np.testing.assert_allclose(fast.matmul(x, w), slow.matmul(x, w), rtol=1e-13, atol=1e-14)
    z = np.linspace(-50, 50, 101)
    np.testing.assert_allclose(fast.sigmoid(z), slow.sigmoid(z), rtol=1e-15, atol=0)
    args = (5, rng.normal(size=5), np.array([0, 2]), np.array([1, 4]), np.array([1.5, -2.0]))
    np.testing.assert_allclose(fast.pattern_energies(*args), slow.pattern_energies(*args), atol=1e-14)
