# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the kernels in ``reliab._pykernels``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport pow, NAN, INFINITY

cnp.import_array()


def rolling_variance(x, Py_ssize_t window):
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0]
    if window < 1 or n < window:
        return np.empty(0, dtype=np.float64)
    out = np.empty(n - window + 1, dtype=np.float64)
    cdef double[::1] ov = out
    cdef Py_ssize_t j, k
    cdef double mean, acc, d
    for j in range(n - window + 1):
        mean = 0.0
        for k in range(j, j + window):
            mean += xv[k]
        mean /= window
        acc = 0.0
        for k in range(j, j + window):
            d = xv[k] - mean
            acc += d * d
        ov[j] = acc / window
    return out


def first_sustained_in_band(values, Py_ssize_t start, double lo, double hi,
                            Py_ssize_t sustain):
    cdef const double[::1] vv = np.ascontiguousarray(values, dtype=np.float64)
    cdef Py_ssize_t n = vv.shape[0]
    cdef Py_ssize_t run = 0
    cdef Py_ssize_t i = start if start > 0 else 0
    cdef double v
    while i < n:
        v = vv[i]
        if lo <= v <= hi:
            run += 1
            if run == sustain:
                return i - sustain + 1
        else:
            run = 0
        i += 1
    return -1


def ece_bins(confidences, correct, Py_ssize_t n_bins):
    cdef const double[::1] cv = np.ascontiguousarray(confidences, dtype=np.float64)
    cdef const double[::1] av = np.ascontiguousarray(correct, dtype=np.float64)
    counts = np.zeros(n_bins, dtype=np.int64)
    conf_sum = np.zeros(n_bins, dtype=np.float64)
    acc_sum = np.zeros(n_bins, dtype=np.float64)
    cdef cnp.int64_t[::1] cnt = counts
    cdef double[::1] cs = conf_sum
    cdef double[::1] acs = acc_sum
    cdef Py_ssize_t i, b
    cdef double c
    for i in range(cv.shape[0]):
        c = cv[i]
        b = <Py_ssize_t>(c * n_bins)
        if b >= n_bins:
            b = n_bins - 1
        elif b < 0:
            b = 0
        cnt[b] += 1
        cs[b] += c
        acs[b] += av[i]
    return counts, conf_sum, acc_sum


def lyapunov_replay(loss, reliability, grad_norm, double kappa, double delta, double tol):
    cdef const double[::1] lv = np.ascontiguousarray(loss, dtype=np.float64)
    cdef const double[::1] rv = np.ascontiguousarray(reliability, dtype=np.float64)
    cdef const double[::1] gv = np.ascontiguousarray(grad_norm, dtype=np.float64)
    cdef Py_ssize_t n = lv.shape[0]
    v = np.empty(n, dtype=np.float64)
    dv = np.empty(n, dtype=np.float64)
    partial = np.empty(n, dtype=np.float64)
    cdef double[::1] vv = v
    cdef double[::1] dvv = dv
    cdef double[::1] pv = partial
    cdef Py_ssize_t t
    cdef long violations = 0
    cdef double max_dv = -INFINITY
    cdef double running = 0.0
    cdef double d, scale
    for t in range(n):
        vv[t] = lv[t] + kappa * (1.0 - rv[t])
        if t == 0:
            dvv[t] = NAN
        else:
            d = vv[t] - vv[t - 1]
            dvv[t] = d
            if d > max_dv:
                max_dv = d
            if d > tol:
                violations += 1
        scale = 1.0 if delta == 0.0 else pow(rv[t], delta)
        running += scale * gv[t] * gv[t]
        pv[t] = running
    return v, dv, violations, max_dv, partial
