# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled implementations of the hot kernels.

Contract-identical to `_kernels_py` (see that module for conventions); the
successive cancellation recursion here runs on flat C buffers with a single
N-sized scratch region per tree instead of per-node temporaries.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, fabs, log, log1p
from libc.stdlib cimport free, malloc

cnp.import_array()

IMPL_NAME = "compiled"


def polar_transform(bits):
    x = np.array(bits, dtype=np.uint8, copy=True)
    if x.ndim != 1:
        raise ValueError("expected a 1-D bit vector")
    cdef Py_ssize_t n = x.shape[0]
    if n & (n - 1):
        raise ValueError(f"length must be a power of two, got {n}")
    cdef unsigned char[::1] xv = x
    cdef Py_ssize_t h = n // 2, off, i
    while h >= 1:
        for off in range(0, n, 2 * h):
            for i in range(h):
                xv[off + i] ^= xv[off + h + i]
        h //= 2
    return x


cdef inline double _f(double a, double b, bint exact) nogil:
    cdef double sa = fabs(a)
    cdef double sb = fabs(b)
    cdef double m = sa if sa < sb else sb
    cdef double v = m if ((a >= 0) == (b >= 0)) else -m
    if exact:
        v += log1p(exp(-(sa + sb))) - log1p(exp(-fabs(sa - sb)))
    return v


cdef void _sc_rec(const double* ll, Py_ssize_t n, Py_ssize_t start,
                  Py_ssize_t depth, Py_ssize_t n_top, double* ws,
                  unsigned char* x, unsigned char* u_out,
                  const unsigned char* frozen_mask,
                  const unsigned char* frozen_vals,
                  const unsigned char* u_true, unsigned char* err,
                  bint exact) nogil:
    cdef Py_ssize_t half, i
    cdef double* child
    cdef unsigned char bit, hard
    if n == 1:
        hard = 0 if ll[0] >= 0 else 1
        if u_true != NULL:           # genie mode: judge, then force correct
            err[start] = 1 if hard != u_true[start] else 0
            bit = u_true[start]
        elif frozen_mask[start]:
            bit = frozen_vals[start]
        else:
            bit = hard
        u_out[start] = bit
        x[start] = bit
        return
    half = n // 2
    child = ws + (n_top - (n_top >> depth))
    for i in range(half):
        child[i] = _f(ll[i], ll[i + half], exact)
    _sc_rec(child, half, start, depth + 1, n_top, ws, x, u_out,
            frozen_mask, frozen_vals, u_true, err, exact)
    for i in range(half):
        child[i] = ll[i + half] + (1.0 - 2.0 * x[start + i]) * ll[i]
    _sc_rec(child, half, start + half, depth + 1, n_top, ws, x, u_out,
            frozen_mask, frozen_vals, u_true, err, exact)
    for i in range(half):
        x[start + i] ^= x[start + half + i]


def sc_decode(llr, frozen_mask, frozen_values, bint exact=True, stats=None):
    cdef cnp.ndarray[double, ndim=1] ll = \
        np.ascontiguousarray(llr, dtype=np.float64)
    cdef cnp.ndarray[unsigned char, ndim=1] fm = \
        np.ascontiguousarray(frozen_mask, dtype=np.uint8)
    cdef cnp.ndarray[unsigned char, ndim=1] fv = \
        np.ascontiguousarray(frozen_values, dtype=np.uint8)
    cdef Py_ssize_t n = ll.shape[0]
    if n & (n - 1):
        raise ValueError(f"length must be a power of two, got {n}")
    cdef cnp.ndarray[unsigned char, ndim=1] u = np.zeros(n, dtype=np.uint8)
    cdef double* ws = <double*> malloc(n * sizeof(double))
    cdef unsigned char* x = <unsigned char*> malloc(n)
    if ws == NULL or x == NULL:
        free(ws); free(x)
        raise MemoryError()
    try:
        _sc_rec(&ll[0], n, 0, 0, n, ws, x, &u[0], &fm[0], &fv[0],
                NULL, NULL, exact)
    finally:
        free(ws); free(x)
    return u


def sc_genie_errors(llr, u_true, bint exact=True):
    cdef cnp.ndarray[double, ndim=1] ll = \
        np.ascontiguousarray(llr, dtype=np.float64)
    cdef cnp.ndarray[unsigned char, ndim=1] ut = \
        np.ascontiguousarray(u_true, dtype=np.uint8)
    cdef Py_ssize_t n = ll.shape[0]
    if n & (n - 1):
        raise ValueError(f"length must be a power of two, got {n}")
    cdef cnp.ndarray[unsigned char, ndim=1] err = np.zeros(n, dtype=np.uint8)
    cdef cnp.ndarray[unsigned char, ndim=1] u = np.zeros(n, dtype=np.uint8)
    cdef double* ws = <double*> malloc(n * sizeof(double))
    cdef unsigned char* x = <unsigned char*> malloc(n)
    if ws == NULL or x == NULL:
        free(ws); free(x)
        raise MemoryError()
    try:
        _sc_rec(&ll[0], n, 0, 0, n, ws, x, &u[0], NULL, NULL,
                &ut[0], &err[0], exact)
    finally:
        free(ws); free(x)
    return err


cdef inline double _lse_range(const double* row, Py_ssize_t lo,
                              Py_ssize_t size) nogil:
    cdef double m = row[lo]
    cdef double acc = 0.0
    cdef Py_ssize_t i
    for i in range(lo + 1, lo + size):
        if row[i] > m:
            m = row[i]
    for i in range(lo, lo + size):
        acc += exp(row[i] - m)
    return m + log(acc)


def subset_llrs(metrics_lab, prefixes, int b, int n_levels):
    cdef cnp.ndarray[double, ndim=2] met = \
        np.ascontiguousarray(metrics_lab, dtype=np.float64)
    cdef cnp.ndarray[long long, ndim=1] pre = \
        np.ascontiguousarray(prefixes, dtype=np.int64)
    cdef Py_ssize_t n = met.shape[0]
    cdef Py_ssize_t size = 1 << (n_levels - b)
    cdef cnp.ndarray[double, ndim=1] out = np.empty(n, dtype=np.float64)
    cdef Py_ssize_t k, base
    cdef const double* row
    for k in range(n):
        base = pre[k] << (n_levels - b + 1)
        row = &met[k, 0]
        out[k] = _lse_range(row, base, size) - _lse_range(row, base + size, size)
    return out


def mi_terms(metrics_lab, labels, int n_levels):
    cdef cnp.ndarray[double, ndim=2] met = \
        np.ascontiguousarray(metrics_lab, dtype=np.float64)
    cdef cnp.ndarray[long long, ndim=1] lab = \
        np.ascontiguousarray(labels, dtype=np.int64)
    cdef Py_ssize_t k_tot = met.shape[0]
    cdef Py_ssize_t m = met.shape[1]
    cdef cnp.ndarray[double, ndim=1] total = np.empty(k_tot, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=2] levels = \
        np.empty((k_tot, n_levels), dtype=np.float64)
    cdef double ln2 = log(2.0)
    cdef Py_ssize_t k, size, base
    cdef int b
    cdef long long l
    cdef double lse_prev, lse_b
    cdef const double* row
    for k in range(k_tot):
        row = &met[k, 0]
        l = lab[k]
        lse_prev = _lse_range(row, 0, m)
        total[k] = (row[l] - lse_prev) / ln2 + n_levels
        for b in range(1, n_levels + 1):
            size = 1 << (n_levels - b)
            base = (l >> (n_levels - b)) << (n_levels - b)
            lse_b = _lse_range(row, base, size)
            levels[k, b - 1] = (lse_b - lse_prev) / ln2 + 1.0
            lse_prev = lse_b
    return total, levels
