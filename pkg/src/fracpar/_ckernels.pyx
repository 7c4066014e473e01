# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels; semantics match fracpar._kernels_py."""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, sqrt, pow

cnp.import_array()


def double_difference_form(W, w, a, b):
    """sum_t sum_i sum_j w_i w_j W_ij (a_ti - a_tj) (b_ti - b_tj), literal loop."""
    cdef const double[:, ::1] Wv = np.ascontiguousarray(W, dtype=np.float64)
    cdef const double[::1] wv = np.ascontiguousarray(w, dtype=np.float64)
    cdef const double[:, ::1] av = np.ascontiguousarray(a, dtype=np.float64)
    cdef const double[:, ::1] bv = np.ascontiguousarray(b, dtype=np.float64)
    cdef Py_ssize_t M = av.shape[0], N = av.shape[1]
    cdef Py_ssize_t t, i, j
    cdef double acc = 0.0, row, ai, bi, wi
    with nogil:
        for t in range(M):
            for i in range(N):
                ai = av[t, i]
                bi = bv[t, i]
                wi = wv[i]
                row = 0.0
                for j in range(N):
                    row += wv[j] * Wv[i, j] * (ai - av[t, j]) * (bi - bv[t, j])
                acc += wi * row
    return acc


def holder_quotients(points, values, double alpha, scale_edges):
    """Per-band maxima of |u_p - u_q| / d^alpha with parabolic distance d."""
    cdef const double[:, ::1] pts = np.ascontiguousarray(points, dtype=np.float64)
    cdef const double[::1] u = np.ascontiguousarray(values, dtype=np.float64)
    cdef const double[::1] edges = np.ascontiguousarray(scale_edges, dtype=np.float64)
    cdef Py_ssize_t nb = edges.shape[0] - 1
    out_arr = np.zeros(nb)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t P = pts.shape[0], p, q, k, lo, hi, mid
    cdef double d, dt, dx, quot
    with nogil:
        for p in range(P - 1):
            for q in range(p + 1, P):
                dt = fabs(pts[q, 0] - pts[p, 0])
                dx = fabs(pts[q, 1] - pts[p, 1])
                d = sqrt(dt)
                if dx > d:
                    d = dx
                if d <= 0.0 or d < edges[0] or d >= edges[nb]:
                    continue
                lo = 0
                hi = nb
                while hi - lo > 1:
                    mid = (lo + hi) // 2
                    if edges[mid] <= d:
                        lo = mid
                    else:
                        hi = mid
                k = lo
                quot = fabs(u[q] - u[p]) / pow(d, alpha)
                if quot > out[k]:
                    out[k] = quot
    return out_arr
