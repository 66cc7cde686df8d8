"""Kernel backend selection.

The compiled extension is preferred when importable; the pure-NumPy module is
the fallback.  Set MEMWALK_BACKEND=python or MEMWALK_BACKEND=compiled to force
a choice (forcing "compiled" raises if the extension is missing).  Both
backends implement the same contracts, see _kernels_py.
"""

from __future__ import annotations

import os

from . import _kernels_py


def _select():
    forced = os.environ.get("MEMWALK_BACKEND", "").strip().lower()
    if forced == "python":
        return _kernels_py
    if forced == "compiled":
        from . import _kernels
        return _kernels
    if forced:
        raise ValueError(
            f"MEMWALK_BACKEND={forced!r} not understood; use 'compiled' or 'python'"
        )
    try:
        from . import _kernels
        return _kernels
    except ImportError:
        return _kernels_py


kernels = _select()
BACKEND_NAME: str = kernels.BACKEND_NAME


def get_kernels(name: str | None = None):
    """Return a kernel module by name, or the selected default."""
    if name is None:
        return kernels
    if name == "python":
        return _kernels_py
    if name == "compiled":
        from . import _kernels
        return _kernels
    raise ValueError(f"unknown backend {name!r}")
