# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernels: local B-spline evaluation and normal-equation assembly.

Same contracts as ``vdmfpca._kernels._pure``; the Gram accumulation runs the
per-point scatter-add over the active tensor-product block in C instead of
materialising dense design rows.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND_NAME = "cython"


def bspline_local(cnp.float64_t[::1] knots, int degree, double lo, double step,
                  int nseg, object x):
    x_arr = np.ascontiguousarray(x, dtype=np.float64)
    cdef cnp.float64_t[::1] xs = x_arr
    cdef Py_ssize_t n = xs.shape[0]
    starts_arr = np.empty(n, dtype=np.int64)
    vals_arr = np.zeros((n, degree + 1), dtype=np.float64)
    cdef cnp.int64_t[::1] starts = starts_arr
    cdef cnp.float64_t[:, ::1] vals = vals_arr
    cdef double left[32]
    cdef double right[32]
    cdef Py_ssize_t i
    cdef int j, r, idx, ell
    cdef double xi, saved, temp, denom

    for i in range(n):
        xi = xs[i]
        idx = <int>((xi - lo) / step)
        if idx < 0:
            idx = 0
        elif idx > nseg - 1:
            idx = nseg - 1
        starts[i] = idx
        ell = idx + degree
        vals[i, 0] = 1.0
        for j in range(1, degree + 1):
            left[j] = xi - knots[ell + 1 - j]
            right[j] = knots[ell + j] - xi
            saved = 0.0
            for r in range(j):
                denom = right[r + 1] + left[j - r]
                temp = vals[i, r] / denom
                vals[i, r] = saved + right[r + 1] * temp
                saved = left[j - r] * temp
            vals[i, j] = saved
    return starts_arr, vals_arr


def accumulate_normal_equations(list starts, list vals, dims, object weights,
                                object values):
    cdef int d = len(starts)
    cdef int k = (<object>vals[0]).shape[1]
    cdef Py_ssize_t n = (<object>values).shape[0]
    cdef long total = 1
    for p in dims:
        total *= <long>p
    gram_arr = np.zeros((total, total), dtype=np.float64)
    rhs_arr = np.zeros(total, dtype=np.float64)
    cdef cnp.float64_t[:, ::1] gram = gram_arr
    cdef cnp.float64_t[::1] rhs = rhs_arr
    cdef cnp.float64_t[::1] w = np.ascontiguousarray(weights, dtype=np.float64)
    cdef cnp.float64_t[::1] y = np.ascontiguousarray(values, dtype=np.float64)

    cdef cnp.int64_t[::1] s0, s1, s2
    cdef cnp.float64_t[:, ::1] v0, v1, v2
    cdef long p1 = 0, p2 = 0
    cdef long idx[64]
    cdef double row[64]
    cdef Py_ssize_t i
    cdef int a, b, c, m, nloc
    cdef long base0, base1
    cdef double wi, wyi, ra

    if k > 4 or d > 3:
        raise ValueError("compiled kernel supports degree <= 3 and d <= 3")

    s0 = starts[0]
    v0 = np.ascontiguousarray(vals[0], dtype=np.float64)
    if d >= 2:
        s1 = starts[1]
        v1 = np.ascontiguousarray(vals[1], dtype=np.float64)
        p1 = <long>dims[1]
    if d >= 3:
        s2 = starts[2]
        v2 = np.ascontiguousarray(vals[2], dtype=np.float64)
        p2 = <long>dims[2]

    for i in range(n):
        wi = w[i]
        wyi = wi * y[i]
        if d == 1:
            nloc = k
            for a in range(k):
                idx[a] = s0[i] + a
                row[a] = v0[i, a]
        elif d == 2:
            nloc = k * k
            m = 0
            for a in range(k):
                base0 = (s0[i] + a) * p1 + s1[i]
                for b in range(k):
                    idx[m] = base0 + b
                    row[m] = v0[i, a] * v1[i, b]
                    m += 1
        else:
            nloc = k * k * k
            m = 0
            for a in range(k):
                base0 = (s0[i] + a) * p1 + s1[i]
                for b in range(k):
                    base1 = (base0 + b) * p2 + s2[i]
                    for c in range(k):
                        idx[m] = base1 + c
                        row[m] = v0[i, a] * v1[i, b] * v2[i, c]
                        m += 1
        for a in range(nloc):
            rhs[idx[a]] += wyi * row[a]
            ra = wi * row[a]
            for b in range(nloc):
                gram[idx[a], idx[b]] += ra * row[b]
    return gram_arr, rhs_arr
