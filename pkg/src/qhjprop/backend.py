"""Backend selection for the hot numeric kernels.

The inner loops in :mod:`qhjprop._kernels` are written in plain numpy so that
numba's nopython mode can compile them unchanged.  By default they are
jit-compiled; setting the environment variable ``QHJPROP_BACKEND=numpy``
before import selects the pure-numpy interpretation of the same code
(useful for debugging, for environments without numba, and for the
benchmark in ``benchmarks/bench_backends.py``).
"""

import os

_requested = os.environ.get("QHJPROP_BACKEND", "").strip().lower()
if _requested not in ("", "numba", "numpy"):
    raise RuntimeError(
        f"QHJPROP_BACKEND={_requested!r} not understood; use 'numba' or 'numpy'"
    )

BACKEND = "numpy"
if _requested != "numpy":
    try:
        from numba import njit as _njit

        BACKEND = "numba"
    except ImportError:
        if _requested == "numba":
            raise
        BACKEND = "numpy"


def maybe_jit(func):
    """Apply numba.njit when the numba backend is active, else return func unchanged."""
    if BACKEND == "numba":
        return _njit(cache=True)(func)
    return func
