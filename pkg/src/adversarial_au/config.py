"""Experiment configuration files and the shared experiment pipeline.

Config files are plain ``key = value`` lines with dotted section prefixes::

    seed = 0
    train.K = 2000
    train.alpha = 0.01
    adam_D.lr = 0.001
    data.n = 2000
    data.missing_rate = 0.5
    label.pairs = 0:1:2.0, 4:5:-3.0
    output.dir = runs/alpha001

``#`` starts a comment. Every source of randomness is derived from ``seed``.
"""
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .data import (DEFAULT_NOISE_SIGMA, LabelDistributionSpec, apply_missing, default_label_spec,
                   generate_dataset, load_dataset, split_dataset)
from .errors import ConfigError, ParseError
from .losses import AdamHyper
from .metrics import evaluate
from .seeding import derive_seed
from .trainer import TrainConfig, train

BASELINE_LABEL = "O-wlc baseline"
ADVERSARIAL_LABEL = "adversarial"


@dataclass(frozen=True)
class ExperimentConfig:
    train: TrainConfig = field(default_factory=TrainConfig)
    seed: int = 0
    data_path: str = None
    n: int = 2000
    d: int = 16
    noise_sigma: float = DEFAULT_NOISE_SIGMA
    label_spec: LabelDistributionSpec = field(default_factory=default_label_spec)
    missing_rate: float = 0.5
    eval_fraction: float = 0.25
    min_support: int = 10
    out_dir: str = "runs/default"

    @property
    def variant(self):
        return BASELINE_LABEL if self.train.alpha == 0 else ADVERSARIAL_LABEL

    def with_seed(self, seed):
        return replace(self, seed=seed, train=replace(self.train, seed=seed))


def parse_key_values(text, path=None):
    """``{key: (value, line_number)}`` from ``key = value`` lines."""
    out = {}
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError("expected 'key = value'", line=no, path=path)
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ParseError("empty key", line=no, path=path)
        if key in out:
            raise ParseError(f"duplicate key {key!r}", line=no, path=path)
        out[key] = (value, no)
    return out


def _int(key, v):
    try:
        return int(v)
    except ValueError:
        raise ConfigError(key, f"expected an integer, got {v!r}") from None


def _float(key, v):
    try:
        return float(v)
    except ValueError:
        raise ConfigError(key, f"expected a number, got {v!r}") from None


def _float_list(key, v):
    return tuple(_float(key, t) for t in v.split(",") if t.strip())


def _int_list(key, v):
    return tuple(_int(key, t.strip()) for t in v.split(",") if t.strip())


def _pairs(key, v):
    pairs = []
    for item in v.split(","):
        item = item.strip()
        if not item:
            continue
        parts = item.split(":")
        if len(parts) != 3:
            raise ConfigError(key, f"pair {item!r} must look like i:j:strength")
        pairs.append((_int(key, parts[0]), _int(key, parts[1]), _float(key, parts[2])))
    return tuple(pairs)


_TRAIN_KEYS = {
    "K": _int, "H_D": _int, "H_R": _int, "m1": _int, "m2": _int, "alpha": _float,
    "eval_every": _int, "hidden_dims": _int_list, "d_hidden": _int,
    "real_label_smoothing": _float, "threshold": _float,
}
_ADAM_KEYS = {f.name: _float for f in fields(AdamHyper)}
_DATA_KEYS = {
    "path": str, "n": _int, "d": _int, "noise_sigma": _float, "missing_rate": _float,
    "eval_fraction": _float, "min_support": _int,
}


def experiment_from_mapping(mapping, base=None):
    """Build an :class:`ExperimentConfig` from ``{key: value}`` strings.

    Unknown keys and unparseable or out-of-range values raise :class:`ConfigError`
    naming the key.
    """
    base = base or ExperimentConfig()
    train_kw, adam_kw, exp_kw, label_kw = {}, {"adam_R": {}, "adam_D": {}}, {}, {}
    for key, value in mapping.items():
        section, _, name = key.rpartition(".")
        if key == "seed":
            exp_kw["seed"] = _int(key, value)
        elif section == "train" and name in _TRAIN_KEYS:
            train_kw[name] = _TRAIN_KEYS[name](key, value)
        elif section in adam_kw and name in _ADAM_KEYS:
            adam_kw[section][name] = _float(key, value)
        elif section == "data" and name in _DATA_KEYS:
            parsed = _DATA_KEYS[name](key, value) if _DATA_KEYS[name] is not str else value
            exp_kw["data_path" if name == "path" else name] = parsed
        elif section == "label" and name in ("n_labels", "unary", "pairs"):
            label_kw[name] = {"n_labels": _int, "unary": _float_list, "pairs": _pairs}[name](key, value)
        elif key == "output.dir":
            exp_kw["out_dir"] = value
        else:
            raise ConfigError(key, "unknown configuration key")

    for section, kw in adam_kw.items():
        if kw:
            try:
                train_kw[section] = replace(getattr(base.train, section), **kw)
            except ValueError as exc:
                raise ConfigError(f"{section}.{next(iter(kw))}", str(exc)) from None
    seed = exp_kw.get("seed", base.seed)
    try:
        tc = replace(base.train, seed=seed, **train_kw)
    except ValueError as exc:
        bad = next((k for k in train_kw if k in str(exc)), next(iter(train_kw), "train"))
        raise ConfigError(f"train.{bad}", str(exc)) from None
    if label_kw:
        spec = base.label_spec
        unary = label_kw.get("unary", spec.unary_logits)
        n_labels = label_kw.get("n_labels", len(unary))
        try:
            exp_kw["label_spec"] = LabelDistributionSpec(n_labels, unary,
                                                         label_kw.get("pairs", spec.pair_potentials))
        except ValueError as exc:
            raise ConfigError("label." + next(iter(label_kw)), str(exc)) from None
    exp = replace(base, train=tc, **exp_kw)
    _validate(exp)
    return exp


def _validate(exp):
    if not 0.0 <= exp.missing_rate < 1.0:
        raise ConfigError("data.missing_rate", "must lie in [0, 1)")
    if not 0.0 < exp.eval_fraction < 1.0:
        raise ConfigError("data.eval_fraction", "must lie in (0, 1)")
    if exp.n < 2:
        raise ConfigError("data.n", "must be >= 2")
    if exp.d < 1:
        raise ConfigError("data.d", "must be >= 1")
    if exp.noise_sigma < 0:
        raise ConfigError("data.noise_sigma", "must be >= 0")
    if exp.min_support < 1:
        raise ConfigError("data.min_support", "must be >= 1")
    if exp.data_path is not None and not Path(exp.data_path).exists():
        raise ConfigError("data.path", f"file {exp.data_path!r} does not exist")
    if not 0.0 < exp.train.threshold < 1.0:
        raise ConfigError("train.threshold", "must lie in (0, 1)")


def load_config(path, overrides=None):
    """Read a config file; ``overrides`` (key -> string) win over file values."""
    path = Path(path)
    if not path.exists():
        raise ConfigError("--config", f"file {str(path)!r} does not exist")
    try:
        raw = {k: v for k, (v, _) in parse_key_values(path.read_text(encoding="utf-8"), path).items()}
    except ParseError as exc:
        raise ConfigError(f"line {exc.line}", str(exc)) from None
    raw.update(overrides or {})
    return experiment_from_mapping(raw)


# -- experiment pipeline -------------------------------------------------------

def build_dataset(exp):
    """Full dataset for an experiment: loaded from ``data_path`` or generated."""
    if exp.data_path is not None:
        return load_dataset(exp.data_path)
    return generate_dataset(exp.n, exp.d, exp.noise_sigma, derive_seed(exp.seed, "data"),
                            exp.label_spec)


def prepare_splits(exp, dataset=None):
    """``(train_set, heldout)`` with the missing-label mask applied to the train part.

    Split and mask depend only on ``seed`` (and the rate), never on the
    training hyperparameters, so runs differing only in ``alpha`` see identical data.
    """
    ds = dataset if dataset is not None else build_dataset(exp)
    train_ds, heldout = split_dataset(ds, exp.eval_fraction, derive_seed(exp.seed, "split"))
    if exp.missing_rate > 0:
        if not train_ds.labeled_mask.all():
            raise ConfigError("data.missing_rate",
                              "dataset file already has unlabeled rows; set missing_rate = 0")
        train_ds = apply_missing(train_ds, exp.missing_rate, derive_seed(exp.seed, "mask"))
    return train_ds, heldout


@dataclass
class ExperimentResult:
    classifier: object
    discriminator: object
    history: object
    report: object
    train_set: object
    heldout: object


def run_experiment(exp, dataset=None, callback=None):
    train_ds, heldout = prepare_splits(exp, dataset)
    R, history = train(exp.train, train_ds, heldout=heldout, callback=callback)
    report = evaluate(R, heldout, exp.train.threshold, exp.min_support)
    return ExperimentResult(R, history.discriminator, history, report, train_ds, heldout)
