"""Counter-based random streams keyed by ``(master seed, stream index)``.

Streams come from numpy's Philox-4x64 bit generator (Salmon et al., 2011,
published round constants) with the 128-bit key ``index << 64 | seed`` and a
zero counter. Any two keys give independent streams, so replicate ``i`` is
reproducible without generating replicates ``0..i-1`` and without shared
state between workers.
"""

from __future__ import annotations

import os

import numpy as np

DEFAULT_SEED = 20200101
_MASK64 = (1 << 64) - 1


def default_seed() -> int:
    """``BINSEQ_SEED`` from the environment, else 20200101."""
    env = os.environ.get("BINSEQ_SEED")
    return int(env) if env else DEFAULT_SEED


def stream(seed: int, index: int = 0) -> np.random.Generator:
    if not 0 <= index <= _MASK64:
        raise ValueError(f"stream index out of range: {index}")
    key = (int(index) << 64) | (int(seed) & _MASK64)
    return np.random.Generator(np.random.Philox(key=key))


def uniforms(seed: int, index: int, n: int, width: int) -> np.ndarray:
    """``n x width`` array of U(0,1) doubles from stream ``(seed, index)``."""
    return stream(seed, index).random((n, max(int(width), 1)))
