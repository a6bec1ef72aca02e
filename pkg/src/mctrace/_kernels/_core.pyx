# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: coordinate-descent sweep, term scoring, chain walk.

Drop-in replacements for ``mctrace._kernels._py``; see that module for
the parameter contracts.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def cd_sweep(double[::1, :] X, double[::1] col_sq, double[::1] denom,
             double[::1] l1, double[::1] r, double[::1] beta,
             long[::1] coords):
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t k, i, j
    cdef double g, hi, lo, b_old, b_new, diff, delta
    cdef double max_delta = 0.0
    for k in range(coords.shape[0]):
        j = coords[k]
        b_old = beta[j]
        g = 0.0
        for i in range(n):
            g += X[i, j] * r[i]
        g = 0.25 * (g + col_sq[j] * b_old)
        hi = g - l1[j]
        lo = g + l1[j]
        if hi > 0.0:
            b_new = hi / denom[j]
        elif lo < 0.0:
            b_new = lo / denom[j]
        else:
            b_new = 0.0
        if b_new != b_old:
            diff = b_old - b_new
            for i in range(n):
                r[i] += X[i, j] * diff
            beta[j] = b_new
            delta = diff if diff > 0.0 else -diff
            if delta > max_delta:
                max_delta = delta
    return max_delta


def eval_terms(double[:, ::1] X, long[::1] s_idx, long[::1] t_idx,
               unsigned char[::1] hinge, double[::1] knots,
               double[::1] coefs):
    cdef Py_ssize_t R = X.shape[0]
    cdef Py_ssize_t K = coefs.shape[0]
    cdef Py_ssize_t r, k
    cdef double u
    cdef cnp.ndarray[cnp.float64_t, ndim=1] eta = np.zeros(R)
    cdef double[::1] out = eta
    for r in range(R):
        for k in range(K):
            if s_idx[k] == t_idx[k]:
                u = X[r, s_idx[k]]
            else:
                u = X[r, s_idx[k]] * X[r, t_idx[k]]
            if hinge[k]:
                u = u - knots[k]
                if u < 0.0:
                    u = 0.0
            out[r] += coefs[k] * u
    return eta


def walk_chain(long[:, ::1] choices, long start):
    cdef Py_ssize_t m = choices.shape[0] + 1
    cdef Py_ssize_t i
    cdef long s = start
    cdef cnp.ndarray[cnp.int64_t, ndim=1] states = np.empty(m, dtype=np.int64)
    cdef long[::1] out = states
    out[0] = s
    for i in range(1, m):
        s = choices[i - 1, s]
        out[i] = s
    return states
