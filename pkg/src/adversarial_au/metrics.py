"""Per-label classification metrics and label-distribution diagnostics.

Undefined values (an F1 with no positives anywhere, an AUC with a single
class, a conditional pair without support) are reported as NaN in arrays,
excluded from averages, and serialized as ``null``.
"""
import json
from dataclasses import asdict, dataclass

import numpy as np
from scipy.stats import rankdata

from .errors import DimensionError
from .models import classifier_forward

DEFAULT_THRESHOLD = 0.5
DEFAULT_MIN_SUPPORT = 10


def binarize(probs, threshold=DEFAULT_THRESHOLD):
    """1 where ``prob >= threshold``, else 0."""
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must lie in (0, 1)")
    return (np.asarray(probs, dtype=np.float64) >= threshold).astype(np.float64)


def _pair(pred, truth):
    pred = np.asarray(pred, dtype=np.float64).reshape(-1)
    truth = np.asarray(truth, dtype=np.float64).reshape(-1)
    if pred.shape != truth.shape:
        raise DimensionError(f"lengths differ: {pred.size} vs {truth.size}")
    return pred, truth


def f1_score(pred, truth):
    """Binary F1; NaN when neither ``pred`` nor ``truth`` has a positive."""
    pred, truth = _pair(pred, truth)
    tp = float(np.sum((pred == 1) & (truth == 1)))
    fp = float(np.sum((pred == 1) & (truth == 0)))
    fn = float(np.sum((pred == 0) & (truth == 1)))
    denom = 2.0 * tp + fp + fn
    return 2.0 * tp / denom if denom > 0 else float("nan")


def auc(scores, truth):
    """Mann-Whitney AUC with ties counted as one half; NaN for a single class."""
    scores, truth = _pair(scores, truth)
    pos = truth == 1
    n_pos = int(pos.sum())
    n_neg = truth.size - n_pos
    if n_pos == 0 or n_neg == 0:
        return float("nan")
    ranks = rankdata(scores)
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def accuracy(pred, truth):
    pred, truth = _pair(pred, truth)
    if pred.size == 0:
        return float("nan")
    return float(np.mean(pred == truth))


def marginal_diff(pred_bin, truth):
    """Per-label positive rates of both matrices and their absolute difference."""
    pred_bin = np.asarray(pred_bin, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if pred_bin.shape != truth.shape:
        raise DimensionError(f"shapes differ: {pred_bin.shape} vs {truth.shape}")
    mp = pred_bin.mean(axis=0)
    mt = truth.mean(axis=0)
    return mp, mt, np.abs(mp - mt)


@dataclass
class ConditionalDiff:
    """``table[i, j] = |P_pred(y_i=1 | y_j=1) - P_truth(y_i=1 | y_j=1)|``.

    Entries are NaN on the diagonal and for pairs whose conditioning label has
    fewer than ``min_support`` positives in ``truth``; those pairs are listed in
    ``skipped``. When the predictions never fire label ``j``, the predicted
    conditional is taken as 0.
    """

    table: np.ndarray
    mean: float
    skipped: list


def conditional_diff(pred_bin, truth, min_support=DEFAULT_MIN_SUPPORT):
    pred_bin = np.asarray(pred_bin, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if pred_bin.shape != truth.shape:
        raise DimensionError(f"shapes differ: {pred_bin.shape} vs {truth.shape}")
    l = truth.shape[1]
    pred_joint = pred_bin.T @ pred_bin
    true_joint = truth.T @ truth
    pred_count = np.diag(pred_joint)
    true_count = np.diag(true_joint)
    table = np.full((l, l), np.nan)
    skipped = []
    for j in range(l):
        for i in range(l):
            if i == j:
                continue
            if true_count[j] < min_support:
                skipped.append((i, j))
                continue
            p_true = true_joint[i, j] / true_count[j]
            p_pred = pred_joint[i, j] / pred_count[j] if pred_count[j] > 0 else 0.0
            table[i, j] = abs(p_pred - p_true)
    kept = table[~np.isnan(table)]
    mean = float(kept.mean()) if kept.size else float("nan")
    return ConditionalDiff(table, mean, skipped)


def nanmean(values):
    values = np.asarray(values, dtype=np.float64)
    kept = values[~np.isnan(values)]
    return float(kept.mean()) if kept.size else float("nan")


@dataclass
class MetricsReport:
    per_label_f1: list
    per_label_auc: list
    per_label_accuracy: list
    avg_f1: float
    avg_auc: float
    avg_accuracy: float
    marginal_pred: list
    marginal_truth: list
    marginal_abs_diff: list
    marginal_diff_mean: float
    conditional_abs_diff_mean: float
    conditional_pairs_skipped: int
    threshold: float
    n_samples: int

    @property
    def f1_undefined(self):
        return [i for i, v in enumerate(self.per_label_f1) if v is None or np.isnan(v)]

    @property
    def auc_undefined(self):
        return [i for i, v in enumerate(self.per_label_auc) if v is None or np.isnan(v)]

    def to_dict(self):
        def clean(v):
            if isinstance(v, list):
                return [clean(x) for x in v]
            if isinstance(v, float) and np.isnan(v):
                return None
            return v
        out = {k: clean(v) for k, v in asdict(self).items()}
        out["f1_undefined_labels"] = self.f1_undefined
        out["auc_undefined_labels"] = self.auc_undefined
        return out

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d):
        def restore(v):
            if isinstance(v, list):
                return [restore(x) for x in v]
            return float("nan") if v is None else v
        fields = cls.__dataclass_fields__
        return cls(**{k: restore(d[k]) for k in fields})


def report_from_predictions(probs, truth, threshold=DEFAULT_THRESHOLD,
                            min_support=DEFAULT_MIN_SUPPORT):
    probs = np.asarray(probs, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if probs.shape != truth.shape:
        raise DimensionError(f"shapes differ: {probs.shape} vs {truth.shape}")
    pred = binarize(probs, threshold)
    l = truth.shape[1]
    f1s = [f1_score(pred[:, j], truth[:, j]) for j in range(l)]
    aucs = [auc(probs[:, j], truth[:, j]) for j in range(l)]
    accs = [accuracy(pred[:, j], truth[:, j]) for j in range(l)]
    mp, mt, md = marginal_diff(pred, truth)
    cond = conditional_diff(pred, truth, min_support)
    return MetricsReport(
        per_label_f1=[float(v) for v in f1s],
        per_label_auc=[float(v) for v in aucs],
        per_label_accuracy=[float(v) for v in accs],
        avg_f1=nanmean(f1s),
        avg_auc=nanmean(aucs),
        avg_accuracy=nanmean(accs),
        marginal_pred=[float(v) for v in mp],
        marginal_truth=[float(v) for v in mt],
        marginal_abs_diff=[float(v) for v in md],
        marginal_diff_mean=float(md.mean()),
        conditional_abs_diff_mean=cond.mean,
        conditional_pairs_skipped=len(cond.skipped),
        threshold=float(threshold),
        n_samples=int(truth.shape[0]),
    )


def evaluate(params, dataset, threshold=DEFAULT_THRESHOLD, min_support=DEFAULT_MIN_SUPPORT):
    """Score a classifier against the true labels of every row in ``dataset``.

    Uses hidden labels too; never call this on data the trainer should not see.
    """
    probs = classifier_forward(params, dataset.features)
    return report_from_predictions(probs, dataset.labels, threshold, min_support)
