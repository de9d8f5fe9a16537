"""JIT switch for the hot kernels.

Kernels are written in the numba-compatible subset of numpy. Setting
``DECOLAB_DISABLE_JIT=1`` in the environment skips compilation and runs the
same functions as plain numpy code (slow, but dependency-light and easy to
step through in a debugger).
"""
import os

_FALSY = ("", "0", "false", "no", "off")

JIT_DISABLED = os.environ.get("DECOLAB_DISABLE_JIT", "0").strip().lower() not in _FALSY

if not JIT_DISABLED:
    try:
        import numba
    except ImportError:  # pragma: no cover - numba is a declared dependency
        JIT_DISABLED = True

_numba_kwargs = {"cache": True, "nogil": True}


def njit(func=None, **kwargs):
    """``numba.njit`` when enabled, identity otherwise."""
    def wrap(f):
        if JIT_DISABLED:
            return f
        return numba.njit(**{**_numba_kwargs, **kwargs})(f)

    if func is None:
        return wrap
    return wrap(func)


def backend():
    return "numpy" if JIT_DISABLED else "numba"
