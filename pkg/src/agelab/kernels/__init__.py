"""Hot simulation loops, with a compiled core and a pure python fallback.

The compiled extension is used when it imported cleanly, unless the
environment variable AGELAB_KERNELS forces a choice ("cython" or "python").
Both backends draw uniforms through the same buffered source in the same
order, so simulation output is bit-identical either way; only speed differs.
"""

import os

from . import _pyref

OK = _pyref.OK
FULL = _pyref.FULL
BOUNDARY = _pyref.BOUNDARY
CAP = _pyref.CAP

_FUNCTIONS = (
    "walk_query", "walk_record", "chain_query", "chain_record",
    "flip_first_entry", "flip_query", "flip_record", "renewal_density",
)

try:
    from . import _core
except ImportError:
    _core = None

_impl = None
_backend = None


def available_backends():
    return ("cython", "python") if _core is not None else ("python",)


def set_backend(name):
    """Select the kernel backend ("cython" or "python") process-wide."""
    global _impl, _backend
    if name == "cython":
        if _core is None:
            raise RuntimeError("compiled kernels are not available in this install")
        _impl = _core
    elif name == "python":
        _impl = _pyref
    else:
        raise ValueError(f"unknown kernel backend {name!r}")
    _backend = name
    for fn in _FUNCTIONS:
        globals()[fn] = getattr(_impl, fn)


def backend():
    return _backend


_requested = os.environ.get("AGELAB_KERNELS")
if _requested:
    set_backend(_requested)
else:
    set_backend("cython" if _core is not None else "python")
