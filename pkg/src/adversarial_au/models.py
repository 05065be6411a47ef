"""Feedforward classifier and label discriminator.

Both networks are ReLU MLPs with a sigmoid output layer. The classifier maps
feature vectors to per-label probabilities; the discriminator maps a label
vector (binary or probabilities) to the probability that it is ground truth.
"""
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .diff_core import Activation, as_matrix, dense_backward, dense_forward
from .errors import DimensionError, DomainError, ParseError

CHECKPOINT_MAGIC = "# adversarial_au checkpoint v1"


@dataclass(frozen=True)
class ClassifierSpec:
    input_dim: int
    num_labels: int
    hidden_dims: tuple = (64, 64)

    def __post_init__(self):
        if self.input_dim < 1 or self.num_labels < 1:
            raise ValueError("input_dim and num_labels must be >= 1")
        if any(h < 1 for h in self.hidden_dims):
            raise ValueError("hidden widths must be >= 1")

    @property
    def layer_dims(self):
        return [self.input_dim, *self.hidden_dims, self.num_labels]


@dataclass(frozen=True)
class DiscriminatorSpec:
    """Three dense layers: labels -> hidden -> hidden -> 1."""

    input_dim: int
    hidden_dim: int = 32

    def __post_init__(self):
        if self.input_dim < 1 or self.hidden_dim < 1:
            raise ValueError("input_dim and hidden_dim must be >= 1")

    @property
    def layer_dims(self):
        return [self.input_dim, self.hidden_dim, self.hidden_dim, 1]


@dataclass
class MlpParams:
    layer_dims: list
    weights: list
    biases: list
    hidden_activation: Activation = Activation.RELU
    output_activation: Activation = Activation.SIGMOID
    kind: str = field(default="mlp")

    def __post_init__(self):
        if len(self.weights) != len(self.layer_dims) - 1 or len(self.biases) != len(self.weights):
            raise DimensionError("need one weight matrix and bias per layer")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            expect = (self.layer_dims[i], self.layer_dims[i + 1])
            if w.shape != expect:
                raise DimensionError(f"weights[{i}] has shape {w.shape}, expected {expect}")
            if b.shape != (expect[1],):
                raise DimensionError(f"biases[{i}] has shape {b.shape}, expected ({expect[1]},)")

    @property
    def n_layers(self):
        return len(self.weights)

    @property
    def input_dim(self):
        return self.layer_dims[0]

    @property
    def output_dim(self):
        return self.layer_dims[-1]

    def activation(self, layer):
        return self.output_activation if layer == self.n_layers - 1 else self.hidden_activation

    def copy(self):
        return MlpParams(list(self.layer_dims), [w.copy() for w in self.weights],
                         [b.copy() for b in self.biases], self.hidden_activation,
                         self.output_activation, self.kind)

    def flatten(self):
        parts = []
        for w, b in zip(self.weights, self.biases):
            parts.append(w.ravel())
            parts.append(b)
        return np.concatenate(parts)

    def with_flat(self, flat):
        """New params with the same layout, filled from a flat vector."""
        flat = np.asarray(flat, dtype=np.float64)
        if flat.size != self.size:
            raise DimensionError(f"flat vector has {flat.size} entries, expected {self.size}")
        weights, biases, pos = [], [], 0
        for w, b in zip(self.weights, self.biases):
            weights.append(flat[pos:pos + w.size].reshape(w.shape).copy())
            pos += w.size
            biases.append(flat[pos:pos + b.size].copy())
            pos += b.size
        return MlpParams(list(self.layer_dims), weights, biases, self.hidden_activation,
                         self.output_activation, self.kind)

    @property
    def size(self):
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def equals(self, other):
        """Bitwise equality of layout and every parameter."""
        return (self.layer_dims == other.layer_dims
                and self.hidden_activation == other.hidden_activation
                and self.output_activation == other.output_activation
                and all(np.array_equal(a, b) for a, b in zip(self.weights, other.weights))
                and all(np.array_equal(a, b) for a, b in zip(self.biases, other.biases)))


def _kind_of(spec):
    return "discriminator" if isinstance(spec, DiscriminatorSpec) else "classifier"


def init_params(spec, seed):
    """Random initialization: He normal for ReLU layers, Xavier normal for the output layer."""
    rng = np.random.default_rng(seed)
    dims = spec.layer_dims
    weights, biases = [], []
    for i in range(len(dims) - 1):
        fan_in, fan_out = dims[i], dims[i + 1]
        if i < len(dims) - 2:
            std = np.sqrt(2.0 / fan_in)
        else:
            std = np.sqrt(2.0 / (fan_in + fan_out))
        weights.append(rng.normal(0.0, std, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpParams(list(dims), weights, biases, kind=_kind_of(spec))


def zero_params(spec):
    dims = spec.layer_dims
    return MlpParams(list(dims), [np.zeros((dims[i], dims[i + 1])) for i in range(len(dims) - 1)],
                     [np.zeros(dims[i + 1]) for i in range(len(dims) - 1)], kind=_kind_of(spec))


def mlp_forward(params, x):
    """Forward pass returning the output and the per-layer caches."""
    h = as_matrix(x, "x")
    if h.shape[1] != params.input_dim:
        raise DimensionError(f"input has {h.shape[1]} columns, network expects {params.input_dim}")
    caches = []
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        h, cache = dense_forward(h, w, b, params.activation(i))
        caches.append(cache)
    return h, caches


def mlp_backward(params, caches, grad_out):
    """Backpropagate ``grad_out`` (gradient w.r.t. the network output).

    Returns ``(grad_input, flat_param_grad)`` with the flat layout of
    :meth:`MlpParams.flatten`.
    """
    g = grad_out
    per_layer = [None] * params.n_layers
    for i in range(params.n_layers - 1, -1, -1):
        g, gw, gb = dense_backward(caches[i], params.weights[i], g)
        per_layer[i] = (gw, gb)
    flat = np.concatenate([part for gw, gb in per_layer for part in (gw.ravel(), gb)])
    return g, flat


def classifier_forward(params, x):
    """Per-label probabilities, shape ``(m, l)``."""
    probs, _ = mlp_forward(params, x)
    return probs


def check_label_input(y, n_labels):
    y = as_matrix(y, "labels")
    if y.shape[1] != n_labels:
        raise DimensionError(f"label input has {y.shape[1]} columns, discriminator expects {n_labels}")
    if np.any(y < 0.0) or np.any(y > 1.0):
        raise DomainError("discriminator inputs must lie in [0, 1]")
    return y


def discriminator_forward(params, y):
    """Ground-truth probability for each label row, shape ``(m,)``."""
    y = check_label_input(y, params.input_dim)
    scores, _ = mlp_forward(params, y)
    return scores[:, 0]


# -- checkpoints ------------------------------------------------------------
# Text format, one token group per line; floats are written with float.hex so
# a load reproduces every bit.

def _act_name(a):
    return Activation(a).name.lower()


def save_checkpoint(params, path):
    lines = [
        CHECKPOINT_MAGIC,
        f"kind {params.kind}",
        "layer_dims " + " ".join(str(d) for d in params.layer_dims),
        f"hidden_activation {_act_name(params.hidden_activation)}",
        f"output_activation {_act_name(params.output_activation)}",
    ]
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        lines.append(f"W{i} {w.shape[0]} {w.shape[1]}")
        lines.extend(" ".join(float(v).hex() for v in row) for row in w)
        lines.append(f"b{i} {b.shape[0]}")
        lines.append(" ".join(float(v).hex() for v in b))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_checkpoint(path):
    text = Path(path).read_text(encoding="utf-8").splitlines()
    it = iter(enumerate(text, start=1))

    def next_line():
        try:
            return next(it)
        except StopIteration:
            raise ParseError("unexpected end of checkpoint", line=len(text) + 1, path=path) from None

    def header(key):
        no, line = next_line()
        parts = line.split()
        if not parts or parts[0] != key:
            raise ParseError(f"expected '{key}'", line=no, path=path)
        return no, parts[1:]

    def floats(no, tokens, count):
        if len(tokens) != count:
            raise ParseError(f"expected {count} values, found {len(tokens)}", line=no, path=path)
        try:
            return [float.fromhex(t) for t in tokens]
        except ValueError as exc:
            raise ParseError(str(exc), line=no, path=path) from None

    no, magic = next_line()
    if magic.strip() != CHECKPOINT_MAGIC:
        raise ParseError("not a checkpoint file", line=no, path=path)
    _, kind = header("kind")
    no, dims = header("layer_dims")
    try:
        layer_dims = [int(d) for d in dims]
        no, (hidden,) = header("hidden_activation")
        no, (output,) = header("output_activation")
        hidden_act = Activation[hidden.upper()]
        output_act = Activation[output.upper()]
    except (ValueError, KeyError) as exc:
        raise ParseError(f"bad header value: {exc}", line=no, path=path) from None
    weights, biases = [], []
    for i in range(len(layer_dims) - 1):
        no, shape = header(f"W{i}")
        try:
            rows, cols = (int(s) for s in shape)
        except ValueError:
            raise ParseError(f"bad shape for W{i}", line=no, path=path) from None
        if (rows, cols) != (layer_dims[i], layer_dims[i + 1]):
            raise ParseError(f"W{i} shape {rows}x{cols} disagrees with layer_dims", line=no, path=path)
        w_rows = []
        for _ in range(rows):
            rno, rline = next_line()
            w_rows.append(floats(rno, rline.split(), cols))
        w = np.array(w_rows)
        no, (blen,) = header(f"b{i}")
        if int(blen) != cols:
            raise ParseError(f"b{i} length disagrees with layer_dims", line=no, path=path)
        bno, bline = next_line()
        b = np.array(floats(bno, bline.split(), cols))
        weights.append(w.reshape(rows, cols))
        biases.append(b)
    return MlpParams(layer_dims, weights, biases, hidden_act, output_act,
                     kind=kind[0] if kind else "mlp")
