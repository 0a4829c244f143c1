"""Hot numeric kernels with a compiled core and a pure-numpy fallback.

The compiled extension is preferred when importable; set ``OMNIFILTER_PURE=1``
to force the fallback.  Both backends are bit-identical by construction.
"""
from __future__ import annotations

import os

_force_pure = os.environ.get("OMNIFILTER_PURE", "").strip().lower() not in ("", "0", "false")

if _force_pure:
    from . import _pure as _impl
    _BACKEND = "pure"
else:
    try:
        from . import _native as _impl  # type: ignore[no-redef]
        _BACKEND = "native"
    except ImportError:
        from . import _pure as _impl  # type: ignore[no-redef]
        _BACKEND = "pure"

solve_lap = _impl.solve_lap
box_match_cost = _impl.box_match_cost


def backend_name() -> str:
    """Which kernel backend this process is using: ``native`` or ``pure``."""
    return _BACKEND


__all__ = ["solve_lap", "box_match_cost", "backend_name"]
