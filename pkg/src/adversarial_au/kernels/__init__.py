"""Hot numerical kernels with a compiled backend and a numpy fallback.

The compiled extension is used when it imports; otherwise the numpy
implementation is used. Set ``ADVERSARIAL_AU_BACKEND=python`` to force the
fallback, or ``=compiled`` to make a missing extension an import error.

Both backends expose the same functions:

``matmul(a, b)``
``dense_forward(x, w, b, act) -> (out, pre)``
``dense_backward(x, pre, w, grad_out, act) -> (grad_in, grad_w, grad_b)``
``sigmoid(z)``
``pattern_energies(n_labels, unary, pair_i, pair_j, strength)``
"""
import os

from . import _pykernels as python_backend
from ._pykernels import IDENTITY, RELU, SIGMOID, SIGMOID_CLAMP

try:
    from . import _ckernels as compiled_backend
except ImportError:  # extension not built
    compiled_backend = None

_requested = os.environ.get("ADVERSARIAL_AU_BACKEND", "auto").lower()
if _requested not in ("auto", "python", "compiled"):
    raise ImportError(f"ADVERSARIAL_AU_BACKEND must be auto, python or compiled, got {_requested!r}")
if _requested == "compiled" and compiled_backend is None:
    raise ImportError("ADVERSARIAL_AU_BACKEND=compiled but the extension is not built")

if _requested == "python" or compiled_backend is None:
    backend = python_backend
    BACKEND_NAME = "python"
else:
    backend = compiled_backend
    BACKEND_NAME = "compiled"

matmul = backend.matmul
dense_forward = backend.dense_forward
dense_backward = backend.dense_backward
sigmoid = backend.sigmoid
pattern_energies = backend.pattern_energies

__all__ = [
    "BACKEND_NAME", "IDENTITY", "RELU", "SIGMOID", "SIGMOID_CLAMP",
    "backend", "compiled_backend", "python_backend",
    "matmul", "dense_forward", "dense_backward", "sigmoid", "pattern_energies",
]
