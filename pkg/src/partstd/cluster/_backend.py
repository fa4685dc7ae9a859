"""Picks the compiled kernels when available.

Set ``PARTSTD_BACKEND=python`` to force the numpy fallback, or
``PARTSTD_BACKEND=cython`` to fail loudly when the extension is missing.
"""
import os

from . import _pykernels

_choice = os.environ.get("PARTSTD_BACKEND", "auto").lower()

if _choice == "python":
    kernels = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _ckernels as kernels
        BACKEND = "cython"
    except ImportError:
        if _choice == "cython":
            raise
        kernels = _pykernels
        BACKEND = "python"
