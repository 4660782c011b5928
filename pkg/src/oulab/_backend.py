"""Kernel backend selection.

The hot off-grid trigonometric kernels exist twice: a numba ``@njit``
version and a pure numpy version.  Set ``OULAB_BACKEND=numpy`` (or
``OULAB_NO_NUMBA=1``) before import to force the numpy path; numba is
used otherwise when it imports cleanly.
"""
import os

_requested = os.environ.get("OULAB_BACKEND", "").strip().lower()
_disabled = os.environ.get("OULAB_NO_NUMBA", "").strip() not in ("", "0")

if _requested not in ("", "numba", "numpy"):
    raise ImportError(f"OULAB_BACKEND must be 'numba' or 'numpy', got {_requested!r}")

HAVE_NUMBA = False
if not _disabled and _requested != "numpy":
    try:
        import numba  # noqa: F401

        HAVE_NUMBA = True
    except ImportError:  # pragma: no cover
        if _requested == "numba":
            raise

BACKEND = "numba" if HAVE_NUMBA else "numpy"
