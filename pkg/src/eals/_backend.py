"""Kernel selection: the compiled extension when importable, numpy otherwise."""

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

BACKENDS = {"python": _pykernels}
if _ckernels is not None:
    BACKENDS["compiled"] = _ckernels

default = _ckernels if _ckernels is not None else _pykernels


def get_kernels(name=None):
    """Kernel module by name (``"compiled"`` or ``"python"``); None picks the default."""
    if name is None:
        return default
    if not isinstance(name, str):
        return name
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} unavailable; have {sorted(BACKENDS)}") from None
