"""Pure numpy implementations of the hot kernels.

Every function here has a twin in ``_ckernels.pyx`` with the same signature.
Activation codes: 0 identity, 1 ReLU, 2 sigmoid.
"""
import numpy as np

IDENTITY, RELU, SIGMOID = 0, 1, 2

# sigmoid(+-36) stays strictly inside (0, 1) in float64
SIGMOID_CLAMP = 36.0


def sigmoid(z):
    z = np.clip(z, -SIGMOID_CLAMP, SIGMOID_CLAMP)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def matmul(a, b):
    return a @ b


def dense_forward(x, w, b, act):
    pre = x @ w + b
    if act == IDENTITY:
        out = pre.copy()
    elif act == RELU:
        out = np.maximum(pre, 0.0)
    else:
        out = sigmoid(pre)
    return out, pre


def dense_backward(x, pre, w, grad_out, act):
    if act == IDENTITY:
        g = grad_out
    elif act == RELU:
        g = grad_out * (pre > 0.0)
    else:
        s = sigmoid(pre)
        g = grad_out * (s * (1.0 - s))
    grad_w = x.T @ g
    grad_b = g.sum(axis=0)
    grad_in = g @ w.T
    return grad_in, grad_w, grad_b


def pattern_energies(n_labels, unary, pair_i, pair_j, strength):
    """Energy of every bit pattern; bit k of the pattern index is label k."""
    patterns = np.arange(1 << n_labels, dtype=np.int64)
    bits = ((patterns[:, None] >> np.arange(n_labels)) & 1).astype(np.float64)
    energy = bits @ unary
    for i, j, s in zip(pair_i, pair_j, strength):
        energy = energy + s * (bits[:, i] * bits[:, j])
    return energy
