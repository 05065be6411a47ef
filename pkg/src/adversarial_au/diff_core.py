"""Dense layer primitives and a finite-difference gradient checker.

Matrices are plain 2-D ``float64`` numpy arrays. Row vectors (biases) are
1-D arrays. The heavy lifting is delegated to :mod:`adversarial_au.kernels`.
"""
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from . import kernels
from .errors import DimensionError, NumericError


class Activation(IntEnum):
    IDENTITY = kernels.IDENTITY
    RELU = kernels.RELU
    SIGMOID = kernels.SIGMOID


@dataclass(frozen=True)
class LayerCache:
    """Forward state needed to backpropagate through one dense layer."""

    input: np.ndarray
    pre_activation: np.ndarray
    activation_kind: Activation


def as_matrix(a, name="matrix"):
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {a.shape}")
    return np.ascontiguousarray(a)


def _require_finite(a, what):
    if not np.all(np.isfinite(a)):
        raise NumericError(f"{what} produced non-finite values")
    return a


def sigmoid(z):
    """Logistic function, clamped so outputs stay strictly inside (0, 1)."""
    return kernels.sigmoid(np.asarray(z, dtype=np.float64))


def matmul(a, b):
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape[1] != b.shape[0]:
        raise DimensionError(f"cannot multiply {a.shape} by {b.shape}")
    return _require_finite(kernels.matmul(a, b), "matmul")


def dense_forward(x, w, b, act=Activation.IDENTITY):
    """Compute ``act(x @ w + b)`` and the cache for :func:`dense_backward`."""
    x = as_matrix(x, "x")
    w = as_matrix(w, "w")
    b = np.ascontiguousarray(b, dtype=np.float64).reshape(-1)
    if x.shape[1] != w.shape[0]:
        raise DimensionError(f"input {x.shape} does not match weights {w.shape}")
    if b.shape[0] != w.shape[1]:
        raise DimensionError(f"bias length {b.shape[0]} does not match weights {w.shape}")
    act = Activation(act)
    out, pre = kernels.dense_forward(x, w, b, int(act))
    _require_finite(out, "dense_forward")
    return out, LayerCache(x, pre, act)


def dense_backward(cache, w, grad_out):
    """Gradients of a dense layer, chained with ``grad_out``.

    Returns ``(grad_in, grad_w, grad_b)`` where ``grad_b`` is 1-D.
    """
    w = as_matrix(w, "w")
    grad_out = as_matrix(grad_out, "grad_out")
    if grad_out.shape != cache.pre_activation.shape:
        raise DimensionError(
            f"grad_out {grad_out.shape} does not match layer output {cache.pre_activation.shape}"
        )
    if cache.input.shape[1] != w.shape[0] or cache.pre_activation.shape[1] != w.shape[1]:
        raise DimensionError(f"cache shapes {cache.input.shape}/{cache.pre_activation.shape} "
                             f"do not match weights {w.shape}")
    return kernels.dense_backward(cache.input, cache.pre_activation, w, grad_out,
                                  int(cache.activation_kind))


def numeric_gradient(loss_fn, params, step=1e-6):
    """Central-difference gradient of a scalar function of a flat vector."""
    params = np.array(params, dtype=np.float64).reshape(-1)
    grad = np.empty_like(params)
    for k in range(params.size):
        orig = params[k]
        params[k] = orig + step
        up = float(loss_fn(params.copy()))
        params[k] = orig - step
        down = float(loss_fn(params.copy()))
        params[k] = orig
        if not (np.isfinite(up) and np.isfinite(down)):
            raise NumericError(f"loss is not finite when perturbing coordinate {k}")
        grad[k] = (up - down) / (2.0 * step)
    return grad


def grad_check(loss_fn, params, step=1e-6, analytic_grad=None):
    """Maximum relative error between an analytic gradient and central differences.

    ``loss_fn(p)`` returns either a scalar loss or a ``(loss, grad)`` pair. When it
    returns only the loss, ``analytic_grad`` must be given. The error for each
    coordinate is ``|analytic - numeric| / max(1, |numeric|)``.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    params = np.array(params, dtype=np.float64).reshape(-1)

    def scalar(p):
        res = loss_fn(p)
        return res[0] if isinstance(res, tuple) else res

    if analytic_grad is None:
        res = loss_fn(params.copy())
        if not isinstance(res, tuple):
            raise TypeError("loss_fn must return (loss, grad) when analytic_grad is not given")
        loss, analytic_grad = res
        if not np.isfinite(loss):
            raise NumericError("loss is not finite at the evaluation point")
    analytic = np.asarray(analytic_grad, dtype=np.float64).reshape(-1)
    if analytic.shape != params.shape:
        raise DimensionError(f"gradient length {analytic.size} != parameter count {params.size}")
    numeric = numeric_gradient(scalar, params, step)
    err = np.abs(analytic - numeric) / np.maximum(1.0, np.abs(numeric))
    return float(err.max()) if err.size else 0.0
