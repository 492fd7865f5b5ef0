"""Kernel backend selection.

The hot loops (neighbor search, bond-force evaluation) exist twice: a numba
``@njit`` implementation and a pure-numpy one with identical semantics. The
default backend is numba when importable, and can be forced with the
``PERIPORE_BACKEND`` environment variable (``numba`` or ``numpy``).
"""

from __future__ import annotations

import os

from .errors import ConfigurationError

ENV_BACKEND = "PERIPORE_BACKEND"

try:
    import numba  # noqa: F401

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised only on numba-less installs
    HAS_NUMBA = False

_VALID = ("numba", "numpy")


def default_backend() -> str:
    """Resolve the backend name from the environment (once per call)."""
    name = os.environ.get(ENV_BACKEND, "").strip().lower()
    if not name:
        return "numba" if HAS_NUMBA else "numpy"
    if name not in _VALID:
        raise ConfigurationError(
            f"environment variable {ENV_BACKEND}={name!r} is not one of {_VALID}"
        )
    if name == "numba" and not HAS_NUMBA:
        raise ConfigurationError(
            f"environment variable {ENV_BACKEND}=numba but numba is not importable"
        )
    return name


def get_kernels(name: str | None = None):
    """Return the kernel module for ``name`` (or the default backend)."""
    name = name or default_backend()
    if name == "numba":
        if not HAS_NUMBA:
            raise ConfigurationError("backend 'numba' requested but numba is not importable")
        from . import kernels_numba

        return kernels_numba
    if name == "numpy":
        from . import kernels_numpy

        return kernels_numpy
    raise ConfigurationError(f"unknown backend {name!r}; expected one of {_VALID}")
