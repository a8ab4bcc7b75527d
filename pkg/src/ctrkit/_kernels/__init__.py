"""Kernel backend selection.

The compiled extension (``ctrkit._core``, built from Cython) is preferred;
a pure-Python implementation with identical semantics is used when the
extension is unavailable or when ``CTRKIT_PURE=1`` is set.
"""
import os

from . import pure as _pure

if os.environ.get("CTRKIT_PURE", "") not in ("", "0"):
    _impl = _pure
else:
    try:
        from ctrkit import _core as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _pure

chain_transforms = _impl.chain_transforms
motor_sim = _impl.motor_sim


def backend_name():
    """Name of the active kernel backend: "compiled" or "pure"."""
    return getattr(_impl, "BACKEND", "compiled")
