"""Kernel backend selection: compiled extension if importable, else numpy."""

import os

if os.environ.get("AKME_PURE_PYTHON", "") not in ("", "0"):
    from akme import _fallback as kernels
else:
    try:
        from akme import _core as kernels
    except ImportError:  # extension not built
        from akme import _fallback as kernels

BACKEND = kernels.BACKEND

__all__ = ["kernels", "BACKEND"]
