# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the kernels in ``_pykernels``.

Signatures and outputs match the numpy versions; the SC decoder walks one
block at a time with an ``N``-double scratch buffer.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, log1p, exp, fmin
from libc.stdlib cimport malloc, free

from ._pykernels import bin_edges

cnp.import_array()

cdef double EQUAL_TOL = 1e-12
cdef double TIE_TOL = 1e-10


def polar_transform_inplace(cnp.uint8_t[:, ::1] x):
    cdef Py_ssize_t b, n = x.shape[1], half, start, t, row
    for row in range(x.shape[0]):
        half = n // 2
        while half >= 1:
            start = 0
            while start < n:
                for t in range(start, start + half):
                    x[row, t] ^= x[row, t + half]
                start += 2 * half
            half //= 2


cdef double CORR_CUTOFF = 50.0


cdef inline double _corr(double x) nogil:
    x = fabs(x)
    if x >= CORR_CUTOFF:
        return 0.0
    return log1p(exp(-x))


cdef inline double _boxplus(double a, double b) nogil:
    cdef double m = fmin(fabs(a), fabs(b))
    if (a < 0) != (b < 0):
        m = -m
    if a == 0.0 or b == 0.0:
        m = 0.0
    return m + _corr(a + b) - _corr(a - b)


cdef void _sc(const double* llr, Py_ssize_t n, const cnp.uint8_t* sel,
              const cnp.uint8_t* pay, cnp.uint8_t* u_out, cnp.uint8_t* x_out,
              double* scratch, double* post) nogil:
    cdef Py_ssize_t h, t
    cdef cnp.uint8_t u
    cdef double* child
    if n == 1:
        if post != NULL:
            post[0] = llr[0]
        if sel[0]:
            u = pay[0]
        else:
            u = 1 if llr[0] < -TIE_TOL else 0
        u_out[0] = u
        x_out[0] = u
        return
    h = n // 2
    child = scratch
    for t in range(h):
        child[t] = _boxplus(llr[t], llr[t + h])
    _sc(child, h, sel, pay, u_out, x_out, scratch + h, post)
    for t in range(h):
        if x_out[t]:
            child[t] = llr[t + h] - llr[t]
        else:
            child[t] = llr[t + h] + llr[t]
    _sc(child, h, sel + h, pay + h, u_out + h, x_out + h, scratch + h,
        post + h if post != NULL else NULL)
    for t in range(h):
        x_out[t] ^= x_out[t + h]


def sc_decode(const double[:, ::1] llr, const cnp.uint8_t[::1] selected,
              const cnp.uint8_t[:, ::1] payload, cnp.uint8_t[:, ::1] u_out,
              cnp.uint8_t[:, ::1] x_out, double[:, ::1] post=None):
    cdef Py_ssize_t b, nb = llr.shape[0], n = llr.shape[1]
    cdef double* scratch
    cdef double* prow
    if n == 0 or nb == 0:
        return
    scratch = <double*> malloc(n * sizeof(double))
    if scratch == NULL:
        raise MemoryError()
    try:
        with nogil:
            for b in range(nb):
                prow = NULL
                if post is not None:
                    prow = &post[b, 0]
                _sc(&llr[b, 0], n, &selected[0], &payload[b, 0], &u_out[b, 0],
                    &x_out[b, 0], scratch, prow)
    finally:
        free(scratch)


cdef inline Py_ssize_t _bin(double a, double b, const double* edges, Py_ssize_t k) nogil:
    cdef double py = a + b, q0, q1, qmin
    cdef Py_ssize_t lo, hi, mid
    if py > 0:
        q0 = a / py
    else:
        q0 = 0.5
    q1 = 1.0 - q0
    if fabs(q0 - q1) <= EQUAL_TOL:
        return 2 * k
    qmin = q0 if q0 < q1 else q1
    # first edge strictly greater than qmin
    lo = 0
    hi = k - 1
    while lo < hi:
        mid = (lo + hi) >> 1
        if edges[mid] > qmin:
            hi = mid
        else:
            lo = mid + 1
    return 2 * lo + (1 if q1 > q0 else 0)


cdef inline Py_ssize_t _acc(double* o, double c0, double c1, double w,
                            const double* edges, Py_ssize_t k) nogil:
    cdef Py_ssize_t idx = _bin(c0, c1, edges, k)
    o[2 * idx] += w * c0
    o[2 * idx + 1] += w * c1
    return idx


def degrade(const double[:, :] probs, Py_ssize_t k, edges=None):
    cdef Py_ssize_t r
    cdef double[::1] e = np.ascontiguousarray(bin_edges(k) if edges is None else edges, dtype=np.float64)
    cdef const double* ep = &e[0] if k > 1 else NULL
    out = np.zeros((2 * k + 1, 2))
    cdef double[:, ::1] o = out
    cdef double* op = &o[0, 0]
    with nogil:
        for r in range(probs.shape[0]):
            _acc(op, probs[r, 0], probs[r, 1], 1.0, ep, k)
    return out


def degrade_transform(const double[:, ::1] probs, int step, Py_ssize_t k, edges=None):
    """Swapping the two copies maps every transformed symbol to one with the
    same masses (minus, plus with u=0) or swapped masses (plus with u=1), so
    only pairs ``i <= j`` are visited."""
    cdef Py_ssize_t m = probs.shape[0], i, j, idx
    cdef double a0, a1, b0, b1, w, c0, c1
    cdef double[::1] e = np.ascontiguousarray(bin_edges(k) if edges is None else edges, dtype=np.float64)
    cdef const double* ep = &e[0] if k > 1 else NULL
    cdef const double* p = &probs[0, 0]
    out = np.zeros((2 * k + 1, 2))
    cdef double[:, ::1] o = out
    cdef double* op = &o[0, 0]
    with nogil:
        for i in range(m):
            a0 = p[2 * i]
            a1 = p[2 * i + 1]
            for j in range(i, m):
                b0 = p[2 * j]
                b1 = p[2 * j + 1]
                w = 1.0 if i == j else 2.0
                if step == 0:
                    _acc(op, a0 * b0 + a1 * b1, a1 * b0 + a0 * b1, w, ep, k)
                else:
                    _acc(op, a0 * b0, a1 * b1, w, ep, k)
                    c0 = a1 * b0
                    c1 = a0 * b1
                    idx = _acc(op, c0, c1, 1.0, ep, k)
                    if i != j:
                        if idx != 2 * k:
                            idx ^= 1
                        op[2 * idx] += c1
                        op[2 * idx + 1] += c0
    return out
