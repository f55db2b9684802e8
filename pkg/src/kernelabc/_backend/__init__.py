"""Backend selection for the pairwise kernel-sum core.

The compiled extension is preferred when importable; the pure-NumPy module
is the fallback.  Set KERNELABC_BACKEND=numpy (or =cython) to force one.
Both expose gaussian_cross_sum / gaussian_self_sum over whitened points
and agree to ~1e-13 relative (summation order differs).
"""

import os

_requested = os.environ.get("KERNELABC_BACKEND", "auto").lower()

if _requested not in ("auto", "cython", "numpy"):
    raise RuntimeError(f"KERNELABC_BACKEND must be auto, cython or numpy, got {_requested!r}")

if _requested == "numpy":
    from . import _pairwise_np as _impl

    BACKEND = "numpy"
else:
    try:
        from . import _pairwise as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        if _requested == "cython":
            raise
        from . import _pairwise_np as _impl

        BACKEND = "numpy"

gaussian_cross_sum = _impl.gaussian_cross_sum
gaussian_self_sum = _impl.gaussian_self_sum

__all__ = ["BACKEND", "gaussian_cross_sum", "gaussian_self_sum"]
