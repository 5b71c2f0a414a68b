"""Banded SPD solver kernels: compiled core with a pure-NumPy fallback.

The backend is chosen once at import time. Set ``WINKLER_EKI_KERNELS=python``
to force the fallback, ``=c`` to require the compiled extension (ImportError
if it is missing), or leave unset/``auto`` to prefer the extension.
"""

import os

from . import band_py

_choice = os.environ.get("WINKLER_EKI_KERNELS", "auto").strip().lower()
if _choice not in {"auto", "c", "python"}:
    raise ImportError(
        "WINKLER_EKI_KERNELS must be 'auto', 'c' or 'python', got %r" % _choice
    )

_impl = None
if _choice in {"auto", "c"}:
    try:
        from . import _band_c as _impl
    except ImportError:
        if _choice == "c":
            raise
if _impl is None:
    _impl = band_py

BACKEND = "python" if _impl is band_py else "c"
cholesky_band = _impl.cholesky_band
solve_band = _impl.solve_band
backsolve_band = _impl.backsolve_band

__all__ = ["BACKEND", "band_py", "backsolve_band", "cholesky_band", "solve_band"]
