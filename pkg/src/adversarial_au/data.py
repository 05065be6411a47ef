"""Synthetic structured-label datasets.

Labels are drawn from an exact pairwise Gibbs distribution over ``{0,1}^l``
(enumerated, not approximated), features are a fixed nonlinear function of
the labels plus Gaussian noise, and a missing-label mask hides whole rows
from the trainer.
"""
import csv
import hashlib
import io
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import kernels
from .errors import CapacityError, DimensionError, ParseError, ProtocolError
from .seeding import derive_seed

MAX_LABELS = 16


@dataclass(frozen=True)
class LabelDistributionSpec:
    """Unary logits plus pairwise co-occurrence potentials.

    ``pair_potentials`` holds ``(i, j, strength)`` with ``i < j``; positive
    strength favours labels firing together, negative strength discourages it.
    """

    n_labels: int
    unary_logits: tuple
    pair_potentials: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "unary_logits", tuple(float(u) for u in self.unary_logits))
        object.__setattr__(self, "pair_potentials",
                           tuple((int(i), int(j), float(s)) for i, j, s in self.pair_potentials))
        if self.n_labels < 1:
            raise ValueError("n_labels must be >= 1")
        if len(self.unary_logits) != self.n_labels:
            raise DimensionError(f"{len(self.unary_logits)} unary logits for {self.n_labels} labels")
        for i, j, _ in self.pair_potentials:
            if not 0 <= i < j < self.n_labels:
                raise ValueError(f"pair ({i}, {j}) must satisfy 0 <= i < j < {self.n_labels}")

    def digest(self):
        text = repr((self.n_labels, self.unary_logits, self.pair_potentials))
        return hashlib.sha256(text.encode()).hexdigest()[:16]


def default_label_spec():
    """Eight labels with one co-occurring pair (0, 1) and one exclusive pair (4, 5)."""
    return LabelDistributionSpec(
        n_labels=8,
        unary_logits=(-1.7, -1.5, -0.4, 0.35, 0.1, -0.3, -1.2, -1.6),
        pair_potentials=((0, 1, 2.0), (4, 5, -3.0)),
    )


def pattern_matrix(n_labels):
    """All ``2^l`` label vectors; row ``k`` holds the bits of ``k`` (label 0 = lowest bit)."""
    patterns = np.arange(1 << n_labels, dtype=np.int64)
    return ((patterns[:, None] >> np.arange(n_labels)) & 1).astype(np.float64)


@dataclass(frozen=True, eq=False)
class ProbTable:
    n_labels: int
    probs: np.ndarray

    def marginals(self):
        return self.probs @ pattern_matrix(self.n_labels)

    def joint(self):
        """``P(y_i = 1, y_j = 1)`` for every pair, as an ``l x l`` matrix."""
        bits = pattern_matrix(self.n_labels)
        return (bits * self.probs[:, None]).T @ bits

    def conditionals(self):
        """``C[i, j] = P(y_i = 1 | y_j = 1)``; NaN where ``P(y_j = 1) = 0``."""
        joint = self.joint()
        marg = np.diag(joint)
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(marg[None, :] > 0, joint / marg[None, :], np.nan)


def enumerate_distribution(spec):
    if spec.n_labels > MAX_LABELS:
        raise CapacityError(f"{spec.n_labels} labels exceeds the exact-enumeration limit of {MAX_LABELS}")
    pairs = spec.pair_potentials
    energy = kernels.pattern_energies(
        spec.n_labels,
        np.array(spec.unary_logits),
        np.array([p[0] for p in pairs], dtype=np.int64),
        np.array([p[1] for p in pairs], dtype=np.int64),
        np.array([p[2] for p in pairs], dtype=np.float64),
    )
    w = np.exp(energy - energy.max())
    return ProbTable(spec.n_labels, w / w.sum())


def sample_labels(table, n, rng_seed):
    """Draw ``n`` i.i.d. label vectors by inverse CDF over the enumerated patterns."""
    rng = np.random.default_rng(rng_seed)
    cdf = np.cumsum(table.probs)
    cdf /= cdf[-1]
    idx = np.searchsorted(cdf, rng.random(n), side="right")
    idx = np.minimum(idx, cdf.size - 1)
    return ((idx[:, None] >> np.arange(table.n_labels)) & 1).astype(np.float64)


def synth_features(labels, d, noise_sigma, seed):
    """``x = y W + tanh(y V) + noise`` with ``W``, ``V`` fixed by ``seed``."""
    labels = np.asarray(labels, dtype=np.float64)
    if noise_sigma < 0:
        raise ValueError("noise_sigma must be non-negative")
    n, l = labels.shape
    rng = np.random.default_rng(seed)
    w_gen = rng.normal(size=(l, d))
    v_gen = rng.normal(size=(l, d))
    noise = rng.normal(scale=noise_sigma, size=(n, d)) if noise_sigma > 0 else np.zeros((n, d))
    return labels @ w_gen + np.tanh(labels @ v_gen) + noise


@dataclass(frozen=True, eq=False)
class TrainingView:
    """What the trainer is allowed to see: all features, labels for T1 only."""

    features: np.ndarray
    labeled_idx: np.ndarray
    unlabeled_idx: np.ndarray
    labeled_labels: np.ndarray

    @property
    def n_labels(self):
        return self.labeled_labels.shape[1]


@dataclass(frozen=True, eq=False)
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    labeled_mask: np.ndarray
    gen_spec_digest: str = ""
    seed: int = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        f = np.asarray(self.features, dtype=np.float64)
        y = np.asarray(self.labels, dtype=np.float64)
        mask = np.asarray(self.labeled_mask, dtype=bool)
        if f.ndim != 2 or y.ndim != 2 or f.shape[0] != y.shape[0] or mask.shape != (f.shape[0],):
            raise DimensionError(f"features {f.shape}, labels {y.shape}, mask {mask.shape} disagree")
        if not np.all((y == 0.0) | (y == 1.0)):
            raise ValueError("labels must be 0 or 1")
        object.__setattr__(self, "features", f)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "labeled_mask", mask)

    @property
    def n(self):
        return self.features.shape[0]

    @property
    def d(self):
        return self.features.shape[1]

    @property
    def n_labels(self):
        return self.labels.shape[1]

    @property
    def n_labeled(self):
        return int(self.labeled_mask.sum())

    def subset(self, idx):
        idx = np.asarray(idx)
        return replace(self, features=self.features[idx], labels=self.labels[idx],
                       labeled_mask=self.labeled_mask[idx])

    def training_view(self):
        labeled = np.flatnonzero(self.labeled_mask)
        if labeled.size == 0:
            raise ProtocolError("dataset has no labeled rows")
        return TrainingView(
            features=self.features.copy(),
            labeled_idx=labeled,
            unlabeled_idx=np.flatnonzero(~self.labeled_mask),
            labeled_labels=self.labels[labeled].copy(),
        )

    def equals(self, other):
        return (np.array_equal(self.features, other.features)
                and np.array_equal(self.labels, other.labels)
                and np.array_equal(self.labeled_mask, other.labeled_mask))


# overlap between label-conditioned feature clouds; classifiers land near 0.78 avg F1
DEFAULT_NOISE_SIGMA = 1.5


def generate_dataset(n, d=16, noise_sigma=DEFAULT_NOISE_SIGMA, seed=0, spec=None):
    """Fully labeled dataset from ``spec`` (default: :func:`default_label_spec`)."""
    spec = spec or default_label_spec()
    table = enumerate_distribution(spec)
    labels = sample_labels(table, n, derive_seed(seed, "labels"))
    features = synth_features(labels, d, noise_sigma, derive_seed(seed, "features"))
    return Dataset(features, labels, np.ones(n, dtype=bool), spec.digest(), seed,
                   meta={"noise_sigma": noise_sigma})


def missing_count(rate, n):
    # tolerance keeps e.g. 0.29 * 100 from flooring to 28
    return int(math.floor(rate * n + 1e-9))


def apply_missing(ds, missing_rate, seed):
    """Hide the labels of ``floor(rate * N)`` uniformly chosen rows."""
    if not 0.0 <= missing_rate < 1.0:
        raise ProtocolError(f"missing_rate must lie in [0, 1), got {missing_rate}")
    if not ds.labeled_mask.all():
        raise ProtocolError("apply_missing expects a fully labeled dataset")
    k = missing_count(missing_rate, ds.n)
    if k == 0:
        return ds
    rng = np.random.default_rng(seed)
    hidden = rng.choice(ds.n, size=k, replace=False)
    mask = ds.labeled_mask.copy()
    mask[hidden] = False
    return replace(ds, labeled_mask=mask)


def split_dataset(ds, eval_fraction, seed):
    """Random ``(train, heldout)`` split; heldout gets ``round(fraction * N)`` rows."""
    if not 0.0 < eval_fraction < 1.0:
        raise ValueError("eval_fraction must lie in (0, 1)")
    n_eval = int(round(eval_fraction * ds.n))
    if n_eval < 1 or n_eval >= ds.n:
        raise ValueError(f"eval split of {n_eval} rows leaves no train or eval data")
    perm = np.random.default_rng(seed).permutation(ds.n)
    return ds.subset(np.sort(perm[n_eval:])), ds.subset(np.sort(perm[:n_eval]))


# -- file I/O ----------------------------------------------------------------

def metadata_path(path):
    path = Path(path)
    return path.with_name(path.name + ".meta")


def save_dataset(ds, path):
    """Write the CSV and its ``.meta`` sidecar."""
    path = Path(path)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([f"f{k}" for k in range(ds.d)] + [f"y{k}" for k in range(ds.n_labels)] + ["labeled"])
    for x, y, lab in zip(ds.features, ds.labels, ds.labeled_mask):
        writer.writerow([repr(float(v)) for v in x] + [int(v) for v in y] + [int(lab)])
    path.write_text(buf.getvalue(), encoding="utf-8")
    meta = {"d": ds.d, "l": ds.n_labels, "N": ds.n,
            "seed": "" if ds.seed is None else ds.seed, "spec_digest": ds.gen_spec_digest}
    meta.update(ds.meta)
    metadata_path(path).write_text("".join(f"{k}={v}\n" for k, v in meta.items()), encoding="utf-8")


def read_metadata(path):
    meta = {}
    mpath = metadata_path(path)
    if not mpath.exists():
        return meta
    for no, line in enumerate(mpath.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        if "=" not in line:
            raise ParseError("expected key=value", line=no, path=mpath)
        k, v = line.split("=", 1)
        meta[k.strip()] = v.strip()
    return meta


def _parse_binary(token, what, no, path):
    if token not in ("0", "1"):
        raise ParseError(f"{what} must be 0 or 1, got {token!r}", line=no, path=path)
    return float(token)


def load_dataset(path):
    path = Path(path)
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ParseError("empty file", line=1, path=path)
    header = rows[0]
    if not header or header[-1] != "labeled":
        raise ParseError("header must end with the 'labeled' column", line=1, path=path)
    d = sum(1 for h in header if h.startswith("f"))
    l = sum(1 for h in header if h.startswith("y"))
    expected = [f"f{k}" for k in range(d)] + [f"y{k}" for k in range(l)] + ["labeled"]
    if header != expected or d == 0 or l == 0:
        raise ParseError("header must be f0..f{d-1},y0..y{l-1},labeled", line=1, path=path)
    features, labels, mask = [], [], []
    for no, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != d + l + 1:
            raise ParseError(f"expected {d + l + 1} fields, found {len(row)}", line=no, path=path)
        try:
            features.append([float(t) for t in row[:d]])
        except ValueError:
            raise ParseError("feature is not a number", line=no, path=path) from None
        labels.append([_parse_binary(t, "label", no, path) for t in row[d:d + l]])
        mask.append(_parse_binary(row[-1], "labeled flag", no, path) == 1.0)
    if not features:
        raise ParseError("no data rows", line=2, path=path)
    meta = read_metadata(path)
    seed = meta.get("seed")
    return Dataset(np.array(features), np.array(labels), np.array(mask, dtype=bool),
                   gen_spec_digest=meta.get("spec_digest", ""),
                   seed=int(seed) if seed not in (None, "") else None,
                   meta={k: v for k, v in meta.items()
                         if k not in ("d", "l", "N", "seed", "spec_digest")})
