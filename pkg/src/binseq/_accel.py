"""Backend selection for the numeric kernels.

Kernels in :mod:`binseq.kernels` come in two flavours: explicit loops compiled
with numba, and a vectorised numpy/scipy path. The numba path is used when
numba imports cleanly and ``BINSEQ_DISABLE_NUMBA`` is unset or ``0``.
"""

from __future__ import annotations

import os

_FALSY = {"", "0", "false", "no", "off"}


def _numba_requested() -> bool:
    return os.environ.get("BINSEQ_DISABLE_NUMBA", "").strip().lower() in _FALSY


try:
    import numba as _numba
except ImportError:  # pragma: no cover - numba is an optional extra
    _numba = None

HAVE_NUMBA = _numba is not None
USE_NUMBA = HAVE_NUMBA and _numba_requested()


def njit(func=None, **kwargs):
    """``numba.njit(cache=True, nogil=True)``, or identity when numba is off."""
    opts = {"cache": True, "nogil": True}
    opts.update(kwargs)

    def wrap(f):
        if not USE_NUMBA:
            return f
        return _numba.njit(**opts)(f)

    if callable(func):
        return wrap(func)
    return wrap


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"
