"""Kernel backend selection.

The compiled `_fastcore` extension is preferred; the pure-Python `_pure`
module is the drop-in fallback. Set INTERLEAVE_FORGE_PURE=1 to force the
fallback (used by the kernel benchmark and the backend-equivalence tests).
"""

import os

if os.environ.get("INTERLEAVE_FORGE_PURE") == "1":
    from . import _pure as _impl

    BACKEND = "pure"
else:
    try:
        from . import _fastcore as _impl  # type: ignore[attr-defined]

        BACKEND = "fastcore"
    except ImportError:
        from . import _pure as _impl

        BACKEND = "pure"

mat_mul_flat = _impl.mat_mul_flat
rref_flat = _impl.rref_flat
ref_reduce = _impl.ref_reduce

__all__ = ["BACKEND", "mat_mul_flat", "rref_flat", "ref_reduce"]
