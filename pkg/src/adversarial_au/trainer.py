"""Alternating adversarial training of the classifier against a label discriminator.

Each outer step runs ``H_D`` discriminator updates followed by ``H_R``
classifier updates. The discriminator learns to tell ground-truth label
vectors (drawn from the labeled rows) from classifier outputs on arbitrary
rows; the classifier minimizes

    (alpha / m) * sum_m -log D(R(x)) + ((1 - alpha) / m1) * sum_m1 BCE(R(x), y)

over a batch of ``m1`` labeled and ``m2`` unlabeled rows, ``m = m1 + m2``.
"""
import csv
import io
import logging
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset, TrainingView
from .errors import NumericError, ProtocolError, TrainingDiverged
from .losses import AdamHyper, AdamState, adam_step, bce_loss, d_loss, r_adv_loss
from .metrics import report_from_predictions
from .models import (ClassifierSpec, DiscriminatorSpec, check_label_input, classifier_forward,
                     init_params, mlp_backward, mlp_forward)
from .seeding import derive_seed

log = logging.getLogger(__name__)

HISTORY_COLUMNS = ("step", "d_loss", "r_sup_loss", "r_adv_loss", "avg_f1", "avg_auc", "avg_acc")


@dataclass(frozen=True)
class TrainConfig:
    K: int = 2000
    H_D: int = 1
    H_R: int = 1
    m1: int = 32
    m2: int = 32
    alpha: float = 0.01
    adam_R: AdamHyper = field(default_factory=AdamHyper)
    adam_D: AdamHyper = field(default_factory=AdamHyper)
    seed: int = 0
    eval_every: int = 100
    hidden_dims: tuple = (64, 64)
    d_hidden: int = 32
    # Off by default. Replaces binary real labels y by y * (1 - s) + s / 2.
    real_label_smoothing: float = 0.0
    threshold: float = 0.5

    def __post_init__(self):
        for name in ("K", "H_D", "H_R", "m1", "eval_every"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.m2 < 0:
            raise ValueError("m2 must be >= 0")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        if not 0.0 <= self.real_label_smoothing < 1.0:
            raise ValueError("real_label_smoothing must lie in [0, 1)")


@dataclass
class HistoryRecord:
    step: int
    d_loss: float
    r_sup_loss: float
    r_adv_loss: float
    avg_f1: float
    avg_auc: float
    avg_acc: float


@dataclass
class TrainHistory:
    records: list = field(default_factory=list)
    discriminator: object = None

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(HISTORY_COLUMNS)
        for r in self.records:
            w.writerow([r.step] + [repr(float(getattr(r, c))) for c in HISTORY_COLUMNS[1:]])
        return buf.getvalue()


def _view(ds):
    if isinstance(ds, TrainingView):
        return ds
    if isinstance(ds, Dataset):
        return ds.training_view()
    raise TypeError(f"expected Dataset or TrainingView, got {type(ds).__name__}")


def sample_d_batch(ds, m, rng):
    """Images from all rows and, independently, real label vectors from labeled rows."""
    view = _view(ds)
    if view.labeled_idx.size == 0:
        raise ProtocolError("no labeled rows to draw real labels from")
    images = view.features[rng.integers(0, view.features.shape[0], size=m)]
    real = view.labeled_labels[rng.integers(0, view.labeled_idx.size, size=m)]
    return images, real


def sample_r_batch(ds, m1, m2, rng):
    """``m1`` labeled rows with labels and up to ``m2`` unlabeled rows.

    When there are no unlabeled rows the unlabeled part is empty.
    """
    view = _view(ds)
    if view.labeled_idx.size == 0:
        raise ProtocolError("classifier updates need at least one labeled row")
    pick = rng.integers(0, view.labeled_idx.size, size=m1)
    x_lab = view.features[view.labeled_idx[pick]]
    y_lab = view.labeled_labels[pick]
    if m2 > 0 and view.unlabeled_idx.size > 0:
        x_unl = view.features[view.unlabeled_idx[rng.integers(0, view.unlabeled_idx.size, size=m2)]]
    else:
        x_unl = view.features[:0]
    return x_lab, y_lab, x_unl


def discriminator_gradient(D, real_labels, fake_labels):
    """``(loss, flat_grad)`` of the discriminator loss w.r.t. the discriminator parameters."""
    real = check_label_input(real_labels, D.input_dim)
    fake = check_label_input(fake_labels, D.input_dim)
    m = real.shape[0]
    scores, caches = mlp_forward(D, np.vstack([real, fake]))
    loss, g_real, g_fake = d_loss(scores[:m, 0], scores[m:, 0])
    _, grad = mlp_backward(D, caches, np.concatenate([g_real, g_fake])[:, None])
    return loss, grad


def train_discriminator_step(R, D, batch, state, hyper, real_label_smoothing=0.0):
    """One Adam descent step on the discriminator with the classifier frozen.

    Returns ``(new_D, new_state, loss)``.
    """
    images, real = batch
    if real_label_smoothing:
        real = real * (1.0 - real_label_smoothing) + 0.5 * real_label_smoothing
    fake = classifier_forward(R, images)
    loss, grad = discriminator_gradient(D, real, fake)
    flat, state = adam_step(D.flatten(), grad, state, hyper)
    return D.with_flat(flat), state, loss


def classifier_objective(R, D, x_lab, y_lab, x_unl, alpha):
    """Composite classifier loss and its gradient w.r.t. the classifier parameters.

    The gradient flows through the frozen discriminator. Returns
    ``(total, sup_loss, adv_loss, flat_grad)``.
    """
    m1 = x_lab.shape[0]
    if m1 < 1:
        raise ProtocolError("classifier objective needs m1 >= 1")
    x = np.vstack([x_lab, x_unl]) if x_unl.shape[0] else x_lab
    probs, caches = mlp_forward(R, x)
    sup, g_sup = bce_loss(probs[:m1], y_lab)
    scores, d_caches = mlp_forward(D, probs)
    adv, g_scores = r_adv_loss(scores[:, 0])
    g_probs, _ = mlp_backward(D, d_caches, g_scores[:, None])
    g_probs = alpha * g_probs
    g_probs[:m1] += (1.0 - alpha) * g_sup
    _, grad = mlp_backward(R, caches, g_probs)
    return alpha * adv + (1.0 - alpha) * sup, sup, adv, grad


def train_classifier_step(R, D, labeled_batch, x_unl, alpha, state, hyper):
    """One Adam descent step on the classifier with the discriminator frozen.

    ``labeled_batch`` is ``(x_lab, y_lab)``. Returns
    ``(new_R, new_state, sup_loss, adv_loss)``.
    """
    x_lab, y_lab = labeled_batch
    _, sup, adv, grad = classifier_objective(R, D, x_lab, y_lab, x_unl, alpha)
    flat, state = adam_step(R.flatten(), grad, state, hyper)
    return R.with_flat(flat), state, sup, adv


def init_models(config, n_inputs, n_labels):
    R = init_params(ClassifierSpec(n_inputs, n_labels, tuple(config.hidden_dims)),
                    derive_seed(config.seed, "init_R"))
    D = init_params(DiscriminatorSpec(n_labels, config.d_hidden), derive_seed(config.seed, "init_D"))
    return R, D


def _check(step, name, value):
    if not np.isfinite(value):
        raise TrainingDiverged(step, name, value)
    return value


def train(config, dataset, heldout=None, callback=None):
    """Run the alternating training loop.

    ``heldout`` (a :class:`Dataset`) is scored at every snapshot; without it the
    snapshot metrics use the visible labeled training rows. ``callback(step, R, D)``
    is invoked after every outer step. Returns ``(R, history)``; the final
    discriminator is kept on ``history.discriminator``.
    """
    view = _view(dataset)
    R, D = init_models(config, view.features.shape[1], view.n_labels)
    state_R = AdamState.zeros(R.size)
    state_D = AdamState.zeros(D.size)
    # separate streams so changing H_D never shifts the classifier's batches
    rng_d = np.random.default_rng(derive_seed(config.seed, "d_batch"))
    rng_r = np.random.default_rng(derive_seed(config.seed, "r_batch"))
    if heldout is not None:
        eval_x, eval_y = heldout.features, heldout.labels
    else:
        eval_x, eval_y = view.features[view.labeled_idx], view.labeled_labels
    m = config.m1 + config.m2
    history = TrainHistory()
    dl = sup = adv = float("nan")
    for step in range(1, config.K + 1):
        try:
            for _ in range(config.H_D):
                batch = sample_d_batch(view, m, rng_d)
                D, state_D, dl = train_discriminator_step(R, D, batch, state_D, config.adam_D,
                                                          config.real_label_smoothing)
                _check(step, "d_loss", dl)
            for _ in range(config.H_R):
                x_lab, y_lab, x_unl = sample_r_batch(view, config.m1, config.m2, rng_r)
                R, state_R, sup, adv = train_classifier_step(R, D, (x_lab, y_lab), x_unl,
                                                             config.alpha, state_R, config.adam_R)
                _check(step, "r_sup_loss", sup)
                _check(step, "r_adv_loss", adv)
        except TrainingDiverged:
            raise
        except NumericError as exc:
            raise TrainingDiverged(step, "forward pass", float("nan")) from exc
        if callback is not None:
            callback(step, R, D)
        if step % config.eval_every == 0 or step == config.K:
            rep = report_from_predictions(classifier_forward(R, eval_x), eval_y, config.threshold)
            history.records.append(HistoryRecord(step, dl, sup, adv, rep.avg_f1, rep.avg_auc,
                                                 rep.avg_accuracy))
            log.debug("step %d d_loss %.4f sup %.4f adv %.4f f1 %.4f", step, dl, sup, adv, rep.avg_f1)
    history.discriminator = D
    return R, history
