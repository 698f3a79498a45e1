"""Kernel backend selection.

The compiled extension is preferred when importable; setting
KARMAPACE_BACKEND=python or =cython forces a choice (forcing cython raises
if the extension was not built). Both backends expose the same entry points
with identical semantics.
"""

from __future__ import annotations

import os

from . import _kernels_py

_FORCED = os.environ.get("KARMAPACE_BACKEND", "auto").lower()

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

if _FORCED == "python":
    kernels = _kernels_py
elif _FORCED == "cython":
    if _compiled is None:
        raise ImportError("KARMAPACE_BACKEND=cython but the compiled extension is missing")
    kernels = _compiled
elif _FORCED == "auto":
    kernels = _compiled if _compiled is not None else _kernels_py
else:
    raise ValueError(f"unknown KARMAPACE_BACKEND value {_FORCED!r}")

BACKEND = kernels.BACKEND_NAME


def get_kernels(name: str):
    """Fetch a backend by name ('python' or 'cython'); used by benchmarks."""
    if name == "python":
        return _kernels_py
    if name == "cython":
        if _compiled is None:
            raise ImportError("compiled extension is not available")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")


def available_backends() -> list[str]:
    return ["python"] + (["cython"] if _compiled is not None else [])
