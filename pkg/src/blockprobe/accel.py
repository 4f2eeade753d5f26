"""Numba acceleration switch.

Hot kernels in :mod:`blockprobe.kernels` are written as plain loops and
compiled with numba when available. Setting ``BLOCKPROBE_NO_NUMBA=1`` (or
installing without numba) selects the uncompiled/numpy fallback path; results
are identical up to floating-point summation order, and bit-identical for the
layout optimizer, which runs the very same function either way.
"""

import os

DISABLE_ENV = "BLOCKPROBE_NO_NUMBA"

_disabled = os.environ.get(DISABLE_ENV, "").strip() not in ("", "0")

if not _disabled:
    try:
        import numba

        HAS_NUMBA = True
    except ImportError:  # pragma: no cover - numba is a hard dep, but stay usable
        HAS_NUMBA = False
else:
    HAS_NUMBA = False


def maybe_njit(*args, **kwargs):
    """``numba.njit`` when acceleration is on, identity decorator otherwise."""
    if HAS_NUMBA:
        import numba

        return numba.njit(*args, **kwargs)

    def passthrough(func):
        return func

    if args and callable(args[0]):
        return args[0]
    return passthrough


def num_threads() -> int:
    if HAS_NUMBA:
        import numba

        return numba.get_num_threads()
    return 1


def set_threads(n: int) -> None:
    """Cap numba worker threads; no-op on the fallback path."""
    if HAS_NUMBA and n >= 1:
        import numba

        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))
