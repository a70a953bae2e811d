"""Per-frame pixel kernels with backend selection at import time.

Prefers the compiled extension when it was built; falls back to the numpy
implementation otherwise.  Set HANDRUB_FORCE_PURE=1 to force the fallback
(used by the benchmark and the cross-backend tests).
"""

import os

from . import pure

if os.environ.get("HANDRUB_FORCE_PURE") == "1":
    _impl = pure
else:
    try:
        from . import _native as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = pure

BACKEND: str = _impl.BACKEND
luma_u8 = _impl.luma_u8
foreground_mask = _impl.foreground_mask
roi_foreground_count = _impl.roi_foreground_count
gray32_features = _impl.gray32_features

__all__ = [
    "BACKEND",
    "luma_u8",
    "foreground_mask",
    "roi_foreground_count",
    "gray32_features",
    "pure",
]
