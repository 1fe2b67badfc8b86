# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled coalition pre-image and fixpoint kernels.

All arrays are C-contiguous. ``trans[v, p]`` is the successor of state ``v``
under joint profile ``p``; ``enabled[v, p]`` is 1 iff every agent's action in
``p`` is available at ``v``; ``group[p]`` is the index of the coalition's part
of ``p`` (all zeros for the empty coalition).
"""
import numpy as np

ctypedef unsigned char u8


cdef void _pre(const int[:, ::1] trans, const u8[:, ::1] enabled,
               const int[::1] group, int ngroups, const u8[::1] target,
               u8[::1] out, u8[::1] seen, u8[::1] bad) noexcept nogil:
    cdef Py_ssize_t n = trans.shape[0]
    cdef Py_ssize_t P = trans.shape[1]
    cdef Py_ssize_t v, p
    cdef int c
    for v in range(n):
        for c in range(ngroups):
            seen[c] = 0
            bad[c] = 0
        for p in range(P):
            if enabled[v, p]:
                c = group[p]
                seen[c] = 1
                if not target[trans[v, p]]:
                    bad[c] = 1
        out[v] = 0
        for c in range(ngroups):
            if seen[c] and not bad[c]:
                out[v] = 1
                break


def pre(const int[:, ::1] trans, const u8[:, ::1] enabled,
        const int[::1] group, int ngroups, const u8[::1] target):
    n = trans.shape[0]
    out = np.zeros(n, dtype=np.uint8)
    seen = np.zeros(ngroups, dtype=np.uint8)
    bad = np.zeros(ngroups, dtype=np.uint8)
    cdef u8[::1] o = out
    cdef u8[::1] s = seen
    cdef u8[::1] b = bad
    with nogil:
        _pre(trans, enabled, group, ngroups, target, o, s, b)
    return out.view(np.bool_)


def until(const int[:, ::1] trans, const u8[:, ::1] enabled,
          const int[::1] group, int ngroups,
          const u8[::1] phi, const u8[::1] psi):
    """Least fixpoint Z = psi | (phi & pre(Z)); returns (Z, number of pre calls)."""
    cdef Py_ssize_t n = trans.shape[0]
    cdef Py_ssize_t v
    cdef int calls = 0
    cdef bint changed = True
    z_arr = np.array(psi, dtype=np.uint8)
    p_arr = np.zeros(n, dtype=np.uint8)
    seen = np.zeros(ngroups, dtype=np.uint8)
    bad = np.zeros(ngroups, dtype=np.uint8)
    cdef u8[::1] z = z_arr
    cdef u8[::1] pz = p_arr
    cdef u8[::1] s = seen
    cdef u8[::1] b = bad
    with nogil:
        while changed:
            _pre(trans, enabled, group, ngroups, z, pz, s, b)
            calls += 1
            changed = False
            for v in range(n):
                if not z[v] and phi[v] and pz[v]:
                    z[v] = 1
                    changed = True
    return z_arr.view(np.bool_), calls


def release(const int[:, ::1] trans, const u8[:, ::1] enabled,
            const int[::1] group, int ngroups,
            const u8[::1] phi, const u8[::1] psi):
    """Greatest fixpoint Z = psi & (phi | pre(Z)); returns (Z, number of pre calls)."""
    cdef Py_ssize_t n = trans.shape[0]
    cdef Py_ssize_t v
    cdef int calls = 0
    cdef bint changed = True
    z_arr = np.array(psi, dtype=np.uint8)
    p_arr = np.zeros(n, dtype=np.uint8)
    seen = np.zeros(ngroups, dtype=np.uint8)
    bad = np.zeros(ngroups, dtype=np.uint8)
    cdef u8[::1] z = z_arr
    cdef u8[::1] pz = p_arr
    cdef u8[::1] s = seen
    cdef u8[::1] b = bad
    with nogil:
        while changed:
            _pre(trans, enabled, group, ngroups, z, pz, s, b)
            calls += 1
            changed = False
            for v in range(n):
                if z[v] and not phi[v] and not pz[v]:
                    z[v] = 0
                    changed = True
    return z_arr.view(np.bool_), calls
