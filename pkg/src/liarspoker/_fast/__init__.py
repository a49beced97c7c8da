"""Round-stepping kernel with compiled and pure-Python backends.

The compiled backend is used when the extension built successfully; set
LIARSPOKER_PURE=1 to force the pure-Python fallback (useful for debugging
and for benchmarking the two against each other).
"""

import os

if os.environ.get("LIARSPOKER_PURE"):
    from . import pure as _impl
else:
    try:
        from . import _core as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import pure as _impl

BACKEND = _impl.BACKEND
FastRound = _impl.FastRound
audit_rollouts = _impl.audit_rollouts
splitmix64 = _impl.splitmix64

__all__ = ["BACKEND", "FastRound", "audit_rollouts", "splitmix64"]
