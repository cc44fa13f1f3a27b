"""Backend selection for the hot numerical kernels.

Every heavy inner loop in this package exists twice: a numba ``@njit`` version
and a vectorized pure-numpy version.  Which one runs is decided once per
process from the environment:

    MOMENTA_VT_BACKEND = "numba" | "numpy"

Default is "numba" when numba imports cleanly, otherwise "numpy".  The numpy
path is the reference implementation; the numba path must agree with it to
floating-point roundoff (covered by tests), so the flag only trades speed.

MOMENTA_VT_THREADS caps the numba thread pool (also settable via the CLI
--threads flag).  On a single-core host this is a no-op.
"""

import os
import warnings

try:
    import numba

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised only on hosts without numba
    numba = None
    HAS_NUMBA = False

_VALID = ("numba", "numpy")
_backend = None


def backend() -> str:
    """Return the active backend name, resolving the env flag on first use."""
    global _backend
    if _backend is None:
        choice = os.environ.get("MOMENTA_VT_BACKEND", "").strip().lower()
        if choice and choice not in _VALID:
            raise ValueError(
                f"MOMENTA_VT_BACKEND={choice!r}: expected one of {_VALID}"
            )
        if not choice:
            choice = "numba" if HAS_NUMBA else "numpy"
        if choice == "numba" and not HAS_NUMBA:
            warnings.warn("numba not importable; falling back to numpy backend")
            choice = "numpy"
        _backend = choice
    return _backend


def set_backend(name: str) -> None:
    """Force the backend (used by tests and the benchmark; bypasses the env flag)."""
    global _backend
    if name not in _VALID:
        raise ValueError(f"backend {name!r}: expected one of {_VALID}")
    if name == "numba" and not HAS_NUMBA:
        raise RuntimeError("numba backend requested but numba is not importable")
    _backend = name


def using_numba() -> bool:
    return backend() == "numba"


def set_threads(n: int | None) -> int:
    """Cap the numba thread pool at n (or MOMENTA_VT_THREADS, or leave default).

    Returns the thread count actually in effect.  Silently clamps to the pool
    size numba was launched with, since numba cannot grow it afterwards.
    """
    if n is None:
        env = os.environ.get("MOMENTA_VT_THREADS", "").strip()
        if env:
            n = int(env)
    if not HAS_NUMBA:
        return 1
    if n is not None:
        n = max(1, min(int(n), numba.config.NUMBA_NUM_THREADS))
        numba.set_num_threads(n)
        return n
    return numba.get_num_threads()


if HAS_NUMBA:
    njit = numba.njit
else:  # pragma: no cover

    def njit(*args, **kwargs):
        """Stand-in decorator so modules import cleanly without numba."""

        def wrap(fn):
            return fn

        if args and callable(args[0]):
            return args[0]
        return wrap
