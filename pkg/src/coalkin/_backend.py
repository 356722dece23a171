"""Backend selection for the hot loops.

``COALKIN_BACKEND=numpy`` forces the pure-numpy path even when numba is
importable; ``COALKIN_BACKEND=numba`` fails loudly if numba is missing.
Unset means "numba if available".
"""
import os
import warnings

_requested = os.environ.get("COALKIN_BACKEND", "").strip().lower()

try:
    import numba  # noqa: F401

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - depends on environment
    HAVE_NUMBA = False

if _requested not in ("", "numba", "numpy"):
    raise ValueError(f"COALKIN_BACKEND must be 'numba' or 'numpy', got {_requested!r}")

if _requested == "numba" and not HAVE_NUMBA:
    raise ImportError("COALKIN_BACKEND=numba but numba is not installed")

if _requested == "" and not HAVE_NUMBA:  # pragma: no cover
    warnings.warn("numba not importable; falling back to the numpy kernels (slower)")

BACKEND = "numpy" if (_requested == "numpy" or not HAVE_NUMBA) else "numba"
