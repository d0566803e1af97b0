"""Kernel backend selection: compiled extension if built, pure Python otherwise.

The engine resolves `active` once per Simulation, so tests and benchmarks can
pin a backend with `use("pure-python")` / `use("cython")` before constructing
one.  DBMFSIM_PURE_PYTHON=1 forces the fallback at import time.
"""

import os

from . import _kernels_py

try:
    from . import _speedups
except ImportError:
    _speedups = None

_BACKENDS = {"pure-python": _kernels_py}
if _speedups is not None:
    _BACKENDS["cython"] = _speedups

if os.environ.get("DBMFSIM_PURE_PYTHON"):
    active = _kernels_py
else:
    active = _speedups if _speedups is not None else _kernels_py


def backend_name() -> str:
    return active.BACKEND


def available_backends() -> tuple:
    return tuple(sorted(_BACKENDS))


def use(name: str):
    """Switch the active backend; returns the module for direct use."""
    global active
    try:
        active = _BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} not available (have {available_backends()})") from None
    return active
