"""Kernel backend selection.

The compiled extension is preferred when importable; the pure-Python
twin is the fallback and can be forced with ``CROSSTAG_PURE=1`` (used
by the cross-backend tests and the benchmark).
"""

import os

from . import pure

if os.environ.get("CROSSTAG_PURE"):
    _impl = pure
    BACKEND = "python"
else:
    try:
        from . import _speedups as _impl

        BACKEND = "c"
    except ImportError:
        _impl = pure
        BACKEND = "python"

tag_sweep = _impl.tag_sweep
tag_conditional = _impl.tag_conditional
merged_sweep = _impl.merged_sweep
pair_conditional = _impl.pair_conditional
set_weights = _impl.set_weights
set_sweep = _impl.set_sweep
viterbi_sweep = _impl.viterbi_sweep


def backends() -> dict[str, object]:
    """All importable kernel implementations, keyed by name."""
    found = {"python": pure}
    try:
        from . import _speedups

        found["c"] = _speedups
    except ImportError:
        pass
    return found
