"""Backend selection for the slot loops.

The compiled extension is used when importable; set ``RISPF_PURE_PYTHON=1``
to force the pure-Python implementation.
"""
import os

from . import _pykernels

BACKEND = "python"
if os.environ.get("RISPF_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        _compiled = None
    else:
        BACKEND = "cython"
else:
    _compiled = None

_impl = _compiled if _compiled is not None else _pykernels

pf_loop = _impl.pf_loop
nr_loop = _impl.nr_loop


def get_backend(name=None):
    """Module providing ``pf_loop``/``nr_loop``; ``name`` is ``"cython"``, ``"python"`` or None."""
    if name is None:
        return _impl
    if name == "python":
        return _pykernels
    if name == "cython":
        if _compiled is None:
            from . import _kernels
            return _kernels
        return _compiled
    raise ValueError(f"unknown backend {name!r}")


def available_backends():
    """Names of the backends importable in this environment."""
    names = ["python"]
    try:
        get_backend("cython")
    except ImportError:
        pass
    else:
        names.insert(0, "cython")
    return tuple(names)
