# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels. Mirrors _ref exactly; see that module for semantics.

ar1_fill and transmit reproduce the reference results bitwise (the build
disables FP contraction); loess_fit matches to rounding because summation
order differs.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()


def ar1_fill(double[:, ::1] z, double[::1] signs, double rho, int block):
    cdef Py_ssize_t n = z.shape[0]
    cdef Py_ssize_t p = z.shape[1]
    cdef double c = sqrt(1.0 - rho * rho)
    cdef Py_ssize_t j, i, start, end
    cdef double s
    for j in range(n):
        start = 0
        while start < p:
            end = start + block
            if end > p:
                end = p
            s = signs[start // block] * rho
            for i in range(start + 1, end):
                z[j, i] = s * z[j, i - 1] + c * z[j, i]
            start = end
    return np.asarray(z)


def transmit(const signed char[::1] hap_a, const signed char[::1] hap_b,
             int start, const unsigned char[::1] cross):
    cdef Py_ssize_t p = hap_a.shape[0]
    out_arr = np.empty(p, dtype=np.int8)
    cdef signed char[::1] out = out_arr
    cdef int state = start & 1
    cdef Py_ssize_t i
    out[0] = hap_a[0] if state == 0 else hap_b[0]
    for i in range(1, p):
        state ^= cross[i - 1]
        out[i] = hap_a[i] if state == 0 else hap_b[i]
    return out_arr


def loess_fit(const double[::1] x, const double[::1] y, int q):
    cdef Py_ssize_t m = x.shape[0]
    fitted_arr = np.empty(m, dtype=np.float64)
    cdef double[::1] fitted = fitted_arr
    cdef Py_ssize_t i, k, lo = 0
    cdef double h, u, w, t, dx, det
    cdef double sw, sx, sy, sxx, sxy, guard
    for i in range(m):
        while lo + q < m and x[i] - x[lo] > x[lo + q] - x[i]:
            lo += 1
        h = x[i] - x[lo]
        if x[lo + q - 1] - x[i] > h:
            h = x[lo + q - 1] - x[i]
        sw = sx = sy = sxx = sxy = 0.0
        for k in range(lo, lo + q):
            dx = x[k] - x[i]
            u = dx / h
            if u < 0.0:
                u = -u
            t = 1.0 - u * u * u
            w = t * t * t
            sw += w
            sx += w * dx
            sy += w * y[k]
            sxx += w * dx * dx
            sxy += w * dx * y[k]
        det = sw * sxx - sx * sx
        guard = sw * sxx
        if guard < 1e-300:
            guard = 1e-300
        if det <= 1e-12 * guard:
            fitted[i] = sy / sw
        else:
            fitted[i] = (sxx * sy - sx * sxy) / det
    return fitted_arr
