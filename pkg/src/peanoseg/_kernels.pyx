# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled chain sweeps; see _kernels_py for the pure-numpy twin."""

import numpy as np

from libc.math cimport log

DEGENERATE_FLOOR = 1e-300
cdef double _FLOOR = 1e-300


def backward_sweep(double[:, :, ::1] phi not None):
    """Max-rescaled backward recursion; returns (beta, log_scale, bad)."""
    cdef Py_ssize_t nsteps = phi.shape[0]
    cdef Py_ssize_t m = phi.shape[1]
    beta_arr = np.empty((nsteps + 1, m), dtype=np.float64)
    scale_arr = np.empty(nsteps + 1, dtype=np.float64)
    cdef double[:, ::1] beta = beta_arr
    cdef double[::1] scale = scale_arr
    cdef Py_ssize_t n, i, j
    cdef double acc, cmax
    for i in range(m):
        beta[nsteps, i] = 1.0
    scale[nsteps] = 0.0
    for n in range(nsteps - 1, -1, -1):
        cmax = 0.0
        for i in range(m):
            acc = 0.0
            for j in range(m):
                acc += phi[n, i, j] * beta[n + 1, j]
            beta[n, i] = acc
            if acc > cmax:
                cmax = acc
        if not cmax > _FLOOR:
            return beta_arr, scale_arr, n
        for i in range(m):
            beta[n, i] /= cmax
        scale[n] = scale[n + 1] + log(cmax)
    return beta_arr, scale_arr, -1


def forward_sweep(double[::1] initial not None, double[:, :, ::1] trans not None):
    """Forward marginal recursion, renormalizing at every site."""
    cdef Py_ssize_t nsteps = trans.shape[0]
    cdef Py_ssize_t m = trans.shape[1]
    marg_arr = np.empty((nsteps + 1, m), dtype=np.float64)
    cdef double[:, ::1] marg = marg_arr
    cdef Py_ssize_t n, i, j
    cdef double acc, s
    s = 0.0
    for i in range(m):
        s += initial[i]
    for i in range(m):
        marg[0, i] = initial[i] / s
    for n in range(nsteps):
        s = 0.0
        for j in range(m):
            acc = 0.0
            for i in range(m):
                acc += marg[n, i] * trans[n, i, j]
            marg[n + 1, j] = acc
            s += acc
        for j in range(m):
            marg[n + 1, j] /= s
    return marg_arr


def sample_sweep(double[::1] initial not None, double[:, :, ::1] trans not None,
                 double[::1] uniforms not None):
    """Walk the chain, inverting each row's cumulative sums at a uniform."""
    cdef Py_ssize_t nsteps = trans.shape[0]
    cdef Py_ssize_t m = trans.shape[1]
    path_arr = np.empty(nsteps + 1, dtype=np.int64)
    cdef long long[::1] path = path_arr
    cdef Py_ssize_t n, j, state
    cdef double acc, u
    u = uniforms[0]
    acc = 0.0
    state = m - 1
    for j in range(m):
        acc += initial[j]
        if u < acc:
            state = j
            break
    path[0] = state
    for n in range(nsteps):
        u = uniforms[n + 1]
        acc = 0.0
        state = m - 1
        for j in range(m):
            acc += trans[n, path[n], j]
            if u < acc:
                state = j
                break
        path[n + 1] = state
    return path_arr
