"""Hot kernels with a compiled backend and a numpy fallback.

The compiled extension is used when importable. Set ``TRAPDAMP_BACKEND=python``
to force the fallback.
"""
import importlib
import os

from . import _fallback

_NAMES = ("switch_model", "rk4_driven", "jump_phase_batch")


def _load_compiled():
    try:
        return importlib.import_module("trapdamp._kernels._core")
    except ImportError:
        return None


_compiled = _load_compiled()


def available_backends():
    return ("cython", "python") if _compiled is not None else ("python",)


def get_backend(name: str):
    """Module implementing the kernels for ``name`` in {"cython", "python"}."""
    if name == "python":
        return _fallback
    if name == "cython" and _compiled is not None:
        return _compiled
    raise ValueError(f"backend {name!r} unavailable; have {available_backends()}")


if os.environ.get("TRAPDAMP_BACKEND", "").lower() == "python" or _compiled is None:
    BACKEND = "python"
else:
    BACKEND = "cython"

_impl = get_backend(BACKEND)
switch_model = _impl.switch_model
rk4_driven = _impl.rk4_driven
jump_phase_batch = _impl.jump_phase_batch
tank_impedance = _fallback.tank_impedance

__all__ = ["BACKEND", "available_backends", "get_backend", "tank_impedance", *_NAMES]
