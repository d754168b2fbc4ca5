# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled B-spline evaluation and dense scatter-add kernels."""
import numpy as np
cimport numpy as cnp
from libc.math cimport isnan

cnp.import_array()


def eval_bsplines(knots, x, double right=np.nan):
    cdef double[:, ::1] T = np.ascontiguousarray(knots, dtype=np.float64)
    cdef double[::1] X = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t m = T.shape[0], q = X.shape[0], k = T.shape[1]
    cdef int p = <int>k - 2
    vals_arr = np.zeros((m, q), dtype=np.float64)
    ders_arr = np.zeros((m, q), dtype=np.float64)
    cdef double[:, ::1] vals = vals_arr
    cdef double[:, ::1] ders = ders_arr
    cdef double[::1] N = np.empty(p + 1, dtype=np.float64)
    cdef double lo0 = 0.0, lo1 = 0.0
    cdef bint closed = not isnan(right)
    cdef Py_ssize_t r, j
    cdef int i, d
    cdef double xv, a, b, den1, den2, acc
    for r in range(m):
        for j in range(q):
            xv = X[j]
            for i in range(p + 1):
                a = T[r, i]
                b = T[r, i + 1]
                if a <= xv < b or (closed and xv == right and b == right and a < b):
                    N[i] = 1.0
                else:
                    N[i] = 0.0
            for d in range(1, p + 1):
                if d == p:
                    lo0 = N[0]
                    lo1 = N[1]
                for i in range(p + 1 - d):
                    acc = 0.0
                    den1 = T[r, i + d] - T[r, i]
                    if den1 != 0.0:
                        acc = (xv - T[r, i]) / den1 * N[i]
                    den2 = T[r, i + d + 1] - T[r, i + 1]
                    if den2 != 0.0:
                        acc += (T[r, i + d + 1] - xv) / den2 * N[i + 1]
                    N[i] = acc
            vals[r, j] = N[0]
            if p > 0:
                acc = 0.0
                den1 = T[r, p] - T[r, 0]
                if den1 != 0.0:
                    acc = lo0 / den1
                den2 = T[r, p + 1] - T[r, 1]
                if den2 != 0.0:
                    acc -= lo1 / den2
                ders[r, j] = p * acc
    return vals_arr, ders_arr


def accumulate_local(double[:, ::1] matrix, idx, double[:, :] local):
    cdef Py_ssize_t[::1] ix = np.ascontiguousarray(idx, dtype=np.intp)
    cdef Py_ssize_t n = ix.shape[0], a, b
    for a in range(n):
        for b in range(n):
            matrix[ix[a], ix[b]] += local[a, b]
