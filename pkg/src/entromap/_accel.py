"""Backend selection for the hot numeric kernels.

Every kernel in :mod:`entromap.kernels` exists in two flavours: a numba
``@njit`` version and a pure-numpy fallback.  The active backend is chosen
once at import time from the ``ENTROMAP_DISABLE_NUMBA`` environment variable
(any of ``1``, ``true``, ``yes``) and can be switched at runtime with
:func:`set_backend` or the :func:`use_backend` context manager.
"""

from __future__ import annotations

import contextlib
import os

try:
    import numba

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - numba is a hard dependency in CI
    numba = None
    NUMBA_AVAILABLE = False

_DISABLED = os.environ.get("ENTROMAP_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes"}

BACKENDS = ("numba", "numpy")
_backend = "numba" if NUMBA_AVAILABLE and not _DISABLED else "numpy"


def get_backend() -> str:
    return _backend


def set_backend(name: str) -> None:
    global _backend
    if name not in BACKENDS:
        raise ValueError(f"unknown backend {name!r}; expected one of {BACKENDS}")
    if name == "numba" and not NUMBA_AVAILABLE:
        raise RuntimeError("numba backend requested but numba is not installed")
    _backend = name


@contextlib.contextmanager
def use_backend(name: str):
    previous = _backend
    set_backend(name)
    try:
        yield
    finally:
        set_backend(previous)


def njit(fn):
    """Compile ``fn`` lazily with ``numba.njit(cache=True)``.

    Without numba the plain Python function is returned, so helper kernels
    still run (slowly) under the numpy backend.
    """
    if not NUMBA_AVAILABLE:
        return fn
    return numba.njit(cache=True, nogil=True)(fn)


class Kernel:
    """Dispatch between a numba implementation and a numpy fallback."""

    def __init__(self, jitted, fallback, name: str):
        self.jitted = jitted
        self.fallback = fallback
        self.__name__ = name

    def __call__(self, *args):
        if _backend == "numba":
            return self.jitted(*args)
        return self.fallback(*args)

    def __repr__(self) -> str:
        return f"<Kernel {self.__name__} backend={_backend}>"


def kernel(fallback):
    """Decorator pairing a numba-compiled kernel with ``fallback``."""

    def wrap(fn):
        return Kernel(njit(fn), fallback, fn.__name__)

    return wrap
