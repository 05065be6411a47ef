"""Labeled sub-seed derivation from one master seed."""
import hashlib

import numpy as np


def derive_seed(master, label):
    """Stable 64-bit sub-seed for ``label`` under ``master``."""
    digest = hashlib.sha256(f"{int(master)}/{label}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


def rng_for(master, label):
    return np.random.default_rng(derive_seed(master, label))
