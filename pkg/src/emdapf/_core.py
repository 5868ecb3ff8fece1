"""Kernel backend selection.

The compiled ``_kernels`` extension is used when it was built; otherwise the
numpy fallback is imported. Set ``EMDAPF_PURE_PYTHON=1`` to force the
fallback (used by the benchmark and the parity tests).
"""

import os

from . import _fallback

BACKEND = "python"
_impl = _fallback

if os.environ.get("EMDAPF_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _fallback

local_extrema = _impl.local_extrema
zero_crossings = _impl.zero_crossings
sd_sum = _impl.sd_sum
hysteresis_track = _impl.hysteresis_track

__all__ = [
    "BACKEND",
    "local_extrema",
    "zero_crossings",
    "sd_sum",
    "hysteresis_track",
]
