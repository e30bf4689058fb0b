# cython: language_level=3, boundscheck=False, wraparound=False
# cython: cdivision=True, initializedcheck=False
"""Compiled log-sum-exp kernel for Gaussian KDE evaluation.

Single pass over the kernel sum per evaluation point with an online
max-shift, so the result matches the numpy fallback to rounding while
avoiding both the (points x data) temporary and per-call overhead.
"""

import numpy as np

from libc.math cimport INFINITY, exp, log


def kde_log_density_batch(const double[:, ::1] points, const double[:, ::1] data,
                          const double[::1] inv_bandwidth, double log_norm):
    """Log-density of a Gaussian product-kernel KDE at each evaluation point."""
    cdef Py_ssize_t total = points.shape[0]
    cdef Py_ssize_t m = data.shape[0]
    cdef Py_ssize_t dim = points.shape[1]
    out_arr = np.empty(total, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, r, j
    cdef double quad, gap, peak, acc
    for i in range(total):
        peak = -INFINITY
        acc = 0.0
        for r in range(m):
            quad = 0.0
            for j in range(dim):
                gap = (points[i, j] - data[r, j]) * inv_bandwidth[j]
                quad -= 0.5 * gap * gap
            if quad > peak:
                acc = acc * exp(peak - quad) + 1.0
                peak = quad
            else:
                acc += exp(quad - peak)
        out[i] = peak + log(acc) + log_norm
    return out_arr
