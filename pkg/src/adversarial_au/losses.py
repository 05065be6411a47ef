"""Training losses for the classifier and discriminator, plus Adam.

Every loss returns ``(value, gradient)``; gradients are with respect to the
loss inputs (probabilities or discriminator scores), ready to be chained into
:func:`adversarial_au.models.mlp_backward`.
"""
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, DomainError

PROB_EPS = 1e-12


def _clamp_probs(p, name):
    p = np.asarray(p, dtype=np.float64)
    if not np.all(np.isfinite(p)) or np.any(p < 0.0) or np.any(p > 1.0):
        raise DomainError(f"{name} must be finite probabilities in [0, 1]")
    return np.clip(p, PROB_EPS, 1.0 - PROB_EPS)


def bce_loss(pred, target):
    """Multi-label cross-entropy, summed over labels and averaged over rows."""
    pred = _clamp_probs(pred, "pred")
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape or pred.ndim != 2:
        raise DimensionError(f"pred {pred.shape} and target {target.shape} must be equal 2-D shapes")
    m = pred.shape[0]
    per_row = -(target * np.log(pred) + (1.0 - target) * np.log1p(-pred)).sum(axis=1)
    loss = float(per_row.sum() / m)
    grad = (-target / pred + (1.0 - target) / (1.0 - pred)) / m
    return loss, grad


def d_loss(d_real, d_fake):
    """Discriminator loss ``-mean(log D(real) + log(1 - D(fake)))``.

    Returns ``(loss, grad_real, grad_fake)``.
    """
    r = _clamp_probs(d_real, "d_real").reshape(-1)
    f = _clamp_probs(d_fake, "d_fake").reshape(-1)
    if r.shape != f.shape:
        raise DimensionError(f"real batch ({r.size}) and fake batch ({f.size}) differ in size")
    m = r.size
    loss = float(-(np.log(r) + np.log1p(-f)).sum() / m)
    return loss, -1.0 / (m * r), 1.0 / (m * (1.0 - f))


def r_adv_loss(d_fake):
    """Non-saturating adversarial loss for the classifier, ``-mean(log D(R(x)))``."""
    f = _clamp_probs(d_fake, "d_fake").reshape(-1)
    m = f.size
    return float(-np.log(f).sum() / m), -1.0 / (m * f)


@dataclass(frozen=True)
class AdamHyper:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if self.lr < 0:
            raise ValueError("lr must be non-negative")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ValueError("beta1 and beta2 must lie in [0, 1)")
        if self.eps <= 0:
            raise ValueError("eps must be positive")


@dataclass(frozen=True)
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def zeros(cls, n):
        return cls(np.zeros(n), np.zeros(n), 0)


def adam_step(params, grads, state, hyper):
    """One bias-corrected Adam update. Returns ``(new_params, new_state)``."""
    params = np.asarray(params, dtype=np.float64)
    grads = np.asarray(grads, dtype=np.float64)
    if params.shape != grads.shape or params.shape != state.m.shape:
        raise DimensionError(f"params {params.shape}, grads {grads.shape} and state "
                             f"{state.m.shape} must have equal lengths")
    t = state.t + 1
    m = hyper.beta1 * state.m + (1.0 - hyper.beta1) * grads
    v = hyper.beta2 * state.v + (1.0 - hyper.beta2) * grads * grads
    m_hat = m / (1.0 - hyper.beta1 ** t)
    v_hat = v / (1.0 - hyper.beta2 ** t)
    new_params = params - hyper.lr * m_hat / (np.sqrt(v_hat) + hyper.eps)
    return new_params, AdamState(m, v, t)
