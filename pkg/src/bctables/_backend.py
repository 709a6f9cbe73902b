"""Picks the compiled replication kernel when it imports, else pure Python.

Set ``BCT_BACKEND=python`` to force the fallback.
"""

import os

try:
    from . import _kernels as kernels
except ImportError:  # extension not built
    kernels = None

BACKENDS = ("compiled", "python")


def available() -> tuple:
    return BACKENDS if kernels is not None else ("python",)


def default() -> str:
    if kernels is None or os.environ.get("BCT_BACKEND", "").lower() == "python":
        return "python"
    return "compiled"


def resolve(name=None) -> str:
    if name is None:
        return default()
    if name not in BACKENDS:
        raise ValueError(f"unknown backend {name!r}")
    if name == "compiled" and kernels is None:
        raise RuntimeError("compiled kernel is not built; reinstall with Cython available")
    return name
