"""Select the trial kernel: compiled if built, else the Python fallback.

Set ``KWHCHECK_PURE_PYTHON=1`` to force the fallback.
"""
from __future__ import annotations

import os

from . import _vm_py

KERNELS = {"python": _vm_py.run_trials}

try:
    from . import _vm_ext
except ImportError:  # extension not built
    _vm_ext = None
else:
    KERNELS["cython"] = _vm_ext.run_trials

if os.environ.get("KWHCHECK_PURE_PYTHON", "") not in ("", "0") or "cython" not in KERNELS:
    BACKEND = "python"
else:
    BACKEND = "cython"


def get_kernel(name: str | None = None):
    name = name or BACKEND
    try:
        return KERNELS[name]
    except KeyError:
        raise ValueError(f"kernel {name!r} is not available (have {sorted(KERNELS)})") from None
