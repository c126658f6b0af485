# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot kernel: dense patch design matrix.

G[s, i] = c_i * (L_i . x_s + b_i) if |x_s - v_i| <= r_i else 0.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def patch_matrix(double[:, ::1] X, double[:, ::1] V, double[:, ::1] L,
                 double[::1] b, double[::1] c, double[::1] r):
    cdef Py_ssize_t ns = X.shape[0]
    cdef Py_ssize_t n = X.shape[1]
    cdef Py_ssize_t npatch = V.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.zeros((ns, npatch))
    cdef double[:, ::1] G = out
    cdef Py_ssize_t s, i, k
    cdef double d2, r2, acc, diff
    for s in range(ns):
        for i in range(npatch):
            r2 = r[i] * r[i]
            d2 = 0.0
            for k in range(n):
                diff = X[s, k] - V[i, k]
                d2 += diff * diff
                if d2 > r2:
                    break
            if d2 <= r2:
                acc = b[i]
                for k in range(n):
                    acc += L[i, k] * X[s, k]
                G[s, i] = c[i] * acc
    return out
