"""Backend selection for the pre-image and fixpoint kernels.

The compiled Cython module is used when it was built and importable; set
``ATLD_PURE_PYTHON=1`` to force the numpy fallback.
"""
import os

import numpy as np

from atld import _pykernels

_compiled = None
if os.environ.get("ATLD_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from atld import _ckernels as _compiled
    except ImportError:  # extension not built
        _compiled = None

BACKENDS = {"python": _pykernels}
if _compiled is not None:
    BACKENDS["cython"] = _compiled

BACKEND = "cython" if _compiled is not None else "python"
_impl = BACKENDS[BACKEND]


def use_backend(name: str) -> None:
    """Switch the active backend ('cython' or 'python')."""
    global _impl, BACKEND
    if name not in BACKENDS:
        raise ValueError(f"backend {name!r} not available; have {sorted(BACKENDS)}")
    _impl = BACKENDS[name]
    BACKEND = name


def _u8(a):
    a = np.ascontiguousarray(a)
    return a.view(np.uint8) if a.dtype == np.bool_ else a.astype(np.uint8)


def pre(trans, enabled, group, ngroups, target):
    """States where some available coalition choice forces ``target`` next."""
    return _impl.pre(trans, _u8(enabled), group, ngroups, _u8(target))


def until(trans, enabled, group, ngroups, phi, psi):
    """Least fixpoint for coalition until; returns (states, pre calls)."""
    return _impl.until(trans, _u8(enabled), group, ngroups, _u8(phi), _u8(psi))


def release(trans, enabled, group, ngroups, phi, psi):
    """Greatest fixpoint for coalition release; returns (states, pre calls)."""
    return _impl.release(trans, _u8(enabled), group, ngroups, _u8(phi), _u8(psi))
