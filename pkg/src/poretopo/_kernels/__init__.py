"""Kernel backend selection.

The compiled extension is preferred when importable; the vectorized numpy
implementation is the fallback.  ``PORETOPO_PURE_PYTHON=1`` forces the
fallback (useful for debugging and for the backend-agreement benchmark).
"""
from __future__ import annotations

import logging
import os

from . import numpy_impl

STATUS_OK = numpy_impl.STATUS_OK
STATUS_INVERTED = numpy_impl.STATUS_INVERTED
STATUS_PLANE_STRESS = numpy_impl.STATUS_PLANE_STRESS

_log = logging.getLogger(__name__)


def _force_pure_python() -> bool:
    return os.environ.get("PORETOPO_PURE_PYTHON", "").strip().lower() in (
        "1", "true", "yes", "on",
    )


if _force_pure_python():
    _impl = numpy_impl
    BACKEND = "python"
else:
    try:
        from . import _core as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        _impl = numpy_impl
        BACKEND = "python"
        _log.info("compiled kernels unavailable; using numpy fallback")

element_batch = _impl.element_batch


def supports_ranges() -> bool:
    """Whether the backend can process element sub-ranges (for threading)."""
    return hasattr(_impl, "element_batch_range")


def element_batch_range(*args, start: int, stop: int):
    return _impl.element_batch_range(*args, start, stop)
