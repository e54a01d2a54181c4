"""Backend selection for the hot kernels.

Set ``QLADDER_DISABLE_NUMBA=1`` to force the pure-numpy path. Both paths
consume the generator stream in the same order, so trajectories are
bit-identical across backends.
"""
import os

_FLAG = os.environ.get("QLADDER_DISABLE_NUMBA", "").strip().lower()

try:
    import numba  # noqa: F401

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and _FLAG not in ("1", "true", "yes", "on")


def njit(*args, **kwargs):
    """``numba.njit`` when numba is importable, identity otherwise."""
    if HAVE_NUMBA:
        import numba

        return numba.njit(*args, **kwargs)
    if args and callable(args[0]):
        return args[0]
    return lambda f: f


def backend_name():
    return "numba" if USE_NUMBA else "numpy"
