"""Kernel backend selection.

The compiled ``_ckernels`` module is used when importable. Setting the
environment variable ``RICCILAB_PURE=1`` forces the pure-Python kernels.
"""
import os

from . import _pykernels

if os.environ.get("RICCILAB_PURE", "") not in ("", "0"):
    kernels = _pykernels
    NAME = "python"
else:
    try:
        from . import _ckernels as kernels
        NAME = "cython"
    except ImportError:  # extension not built
        kernels = _pykernels
        NAME = "python"

STATUS_OK = _pykernels.STATUS_OK
STATUS_CAP = _pykernels.STATUS_CAP
STATUS_UNDERFLOW = _pykernels.STATUS_UNDERFLOW
