# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled enumeration kernels.  Mirrors ``_pykernels`` exactly."""

import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY

cnp.import_array()


def best_period_pattern(const double[:, ::1] K, const double[::1] base, const double[::1] gain,
                        const double[::1] varcost, const double[::1] cc, double ma, double tol):
    cdef Py_ssize_t R = base.shape[0]
    cdef Py_ssize_t n_act = 0, i, b, r
    cdef long mask, n_masks, best_mask = -1
    cdef double cost, best = INFINITY, v
    cdef bint ok

    active_arr = np.flatnonzero(np.asarray(gain) > 0).astype(np.intp)
    cdef Py_ssize_t[::1] active = active_arr
    n_act = active.shape[0]
    n_masks = 1 << n_act
    cdef double[::1] u = np.empty(R, dtype=np.float64)

    for mask in range(n_masks):
        cost = 0.0
        for b in range(n_act):
            if (mask >> b) & 1:
                cost += varcost[active[b]]
        if cost >= best:
            continue
        ok = True
        for r in range(R):
            v = base[r]
            for b in range(n_act):
                if (mask >> b) & 1:
                    v += K[r, active[b]] * gain[active[b]]
            if v < ma - tol or v + cc[r] > 1.0 + tol:
                ok = False
                break
        if ok:
            best = cost
            best_mask = mask

    if best_mask < 0:
        return np.inf, None
    p = np.zeros(R, dtype=np.int8)
    for b in range(n_act):
        if (best_mask >> b) & 1:
            p[active[b]] = 1
    return best, p


def propagate_topological(Py_ssize_t[::1] order, const Py_ssize_t[::1] inbound_ptr,
                          const Py_ssize_t[::1] inbound_idx, const double[:, ::1] coef,
                          const double[:, ::1] const, const double[:, ::1] gain_on):
    cdef Py_ssize_t R = const.shape[0], T = const.shape[1]
    cdef Py_ssize_t k, r, j, t, src
    out = np.zeros((R, T), dtype=np.float64)
    cdef double[:, ::1] u = out
    for k in range(order.shape[0]):
        r = order[k]
        for t in range(T):
            u[r, t] = const[r, t] + gain_on[r, t]
        for j in range(inbound_ptr[r], inbound_ptr[r + 1]):
            src = inbound_idx[j]
            for t in range(T):
                u[r, t] += coef[j, t] * u[src, t]
    return out
