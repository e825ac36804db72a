"""Backend selection for the compiled kernels.

Set ``EMSSL_DISABLE_NUMBA=1`` to force the pure-numpy path. The numpy path is
also used automatically when numba cannot be imported.
"""

import os

ENV_FLAG = "EMSSL_DISABLE_NUMBA"

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None


def numba_available():
    return numba is not None


def numba_requested():
    return os.environ.get(ENV_FLAG, "").strip().lower() not in ("1", "true", "yes", "on")


def njit(fn):
    """Compile ``fn`` with the shared options, or return it unchanged without numba."""
    if numba is None:
        return fn
    # no fastmath: the kernels promise a fixed floating-point evaluation order
    return numba.njit(cache=True, nogil=True, fastmath=False, error_model="numpy")(fn)


BACKEND = "numba" if (numba_available() and numba_requested()) else "numpy"
