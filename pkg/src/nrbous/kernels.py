"""Backend selection for the triad kernels.

The compiled extension is used when it imports; setting the environment
variable ``NRBOUS_PURE_PYTHON=1`` forces the numpy fallback.
"""
from __future__ import annotations

import os

from . import _triad_py

BACKEND = "python"
accumulate_restricted = _triad_py.accumulate_restricted
convolve_cube = _triad_py.convolve_cube

if os.environ.get("NRBOUS_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _triad as _compiled
    except ImportError:  # extension not built
        _compiled = None
    if _compiled is not None:
        BACKEND = "cython"
        accumulate_restricted = _compiled.accumulate_restricted
        convolve_cube = _compiled.convolve_cube


def backends():
    """Mapping of available backend names to ``(accumulate_restricted, convolve_cube)``."""
    out = {"python": (_triad_py.accumulate_restricted, _triad_py.convolve_cube)}
    try:
        from . import _triad as compiled
    except ImportError:
        return out
    out["cython"] = (compiled.accumulate_restricted, compiled.convolve_cube)
    return out
