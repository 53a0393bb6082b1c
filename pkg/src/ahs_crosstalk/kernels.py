"""Kernel backend selection.

The compiled core is used when it was built; set ``AHS_PURE_PYTHON=1`` to force
the numpy fallback.
"""
import os

from . import _pykernels

if os.environ.get("AHS_PURE_PYTHON", "") not in ("", "0"):
    _backend = _pykernels
else:
    try:
        from . import _ckernels as _backend
    except ImportError:
        _backend = _pykernels

BACKEND = _backend.BACKEND
apply = _backend.apply
propagate = _backend.propagate
