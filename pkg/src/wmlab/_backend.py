"""Kernel selection: compiled extension when importable, Python otherwise."""
from __future__ import annotations

from . import _kernels_py

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

_active = _compiled if _compiled is not None else _kernels_py


def name() -> str:
    return "compiled" if _active is _compiled else "python"


def compiled_available() -> bool:
    return _compiled is not None


def use(backend: str) -> None:
    """Switch kernels at runtime (``"compiled"`` or ``"python"``)."""
    global _active
    if backend == "python":
        _active = _kernels_py
    elif backend == "compiled":
        if _compiled is None:
            raise RuntimeError("compiled kernels are not built")
        _active = _compiled
    else:
        raise ValueError(f"unknown backend {backend!r}")


def echelon_int(rows, ncols):
    return _active.echelon_int(rows, ncols)


def matmul(a, b, inner, ncols):
    return _active.matmul(a, b, inner, ncols)
