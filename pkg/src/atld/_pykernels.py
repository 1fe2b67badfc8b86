"""Pure-Python (numpy) versions of the kernels in ``_ckernels.pyx``.

Same signatures and results; used when the compiled module is unavailable
or when ``ATLD_PURE_PYTHON=1`` is set.
"""
import numpy as np


def _onehot(group, ngroups):
    m = np.zeros((len(group), ngroups), dtype=np.int32)
    m[np.arange(len(group)), group] = 1
    return m


def _pre(trans, enabled, onehot, target):
    en = enabled.view(np.bool_)
    bad = en & ~target.view(np.bool_)[trans]
    seen = en.astype(np.int32) @ onehot
    nbad = bad.astype(np.int32) @ onehot
    return ((seen > 0) & (nbad == 0)).any(axis=1)


def pre(trans, enabled, group, ngroups, target):
    return _pre(trans, enabled, _onehot(group, ngroups), target)


def until(trans, enabled, group, ngroups, phi, psi):
    onehot = _onehot(group, ngroups)
    phi = phi.view(np.bool_)
    z = psi.view(np.bool_).copy()
    calls = 0
    while True:
        new = z | (phi & _pre(trans, enabled, onehot, z))
        calls += 1
        if (new == z).all():
            return z, calls
        z = new


def release(trans, enabled, group, ngroups, phi, psi):
    onehot = _onehot(group, ngroups)
    phi = phi.view(np.bool_)
    z = psi.view(np.bool_).copy()
    calls = 0
    while True:
        new = z & (phi | _pre(trans, enabled, onehot, z))
        calls += 1
        if (new == z).all():
            return z, calls
        z = new
