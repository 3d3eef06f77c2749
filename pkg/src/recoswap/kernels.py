"""Kernel selection: the compiled extension when built, else pure Python.

Set ``RECOSWAP_PURE_PYTHON=1`` to force the fallback.
"""

from __future__ import annotations

import os

from . import _pykernels

if os.environ.get("RECOSWAP_PURE_PYTHON") == "1":
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _pykernels

BACKEND = "cython" if _impl is not _pykernels else "python"

bf_swap = _impl.bf_swap
fast_swap = _impl.fast_swap
XorShift64Star = _impl.XorShift64Star

FAST_OK = _pykernels.FAST_OK
FAST_CYCLE = _pykernels.FAST_CYCLE
FAST_SEGMENT_ORDER = _pykernels.FAST_SEGMENT_ORDER
FAST_SEGMENT_CYCLE = _pykernels.FAST_SEGMENT_CYCLE
FAST_BEFORE_START = _pykernels.FAST_BEFORE_START
