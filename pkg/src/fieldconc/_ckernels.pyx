# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled batch kernels for the dyadic order.

Signatures mirror :mod:`fieldconc._pykernels`; arrays are C-contiguous
``int64`` of shape ``(n, d)``.
"""
import numpy as np

from libc.stdint cimport int64_t, uint64_t


cdef inline int _bitlen(uint64_t x) nogil:
    cdef int n = 0
    while x:
        x >>= 1
        n += 1
    return n


cdef inline int _kappa(const int64_t[:] a, const int64_t[:] b) nogil:
    cdef Py_ssize_t i
    cdef uint64_t acc = 0
    for i in range(a.shape[0]):
        acc |= <uint64_t>(a[i] ^ b[i])
    return _bitlen(acc) - 1


cdef inline int _compare(const int64_t[:] a, const int64_t[:] b) nogil:
    cdef int k = _kappa(a, b)
    cdef Py_ssize_t i
    cdef int64_t x, y
    if k < 0:
        return 0
    for i in range(a.shape[0]):
        x = a[i] >> k
        y = b[i] >> k
        if x < y:
            return -1
        if x > y:
            return 1
    return 0


def kappa_many(const int64_t[:, :] a, const int64_t[:, :] b):
    cdef Py_ssize_t n = a.shape[0], j
    out = np.empty(n, dtype=np.int64)
    cdef int64_t[:] o = out
    with nogil:
        for j in range(n):
            o[j] = _kappa(a[j], b[j])
    return out


def compare_many(const int64_t[:, :] a, const int64_t[:, :] b):
    cdef Py_ssize_t n = a.shape[0], j
    out = np.empty(n, dtype=np.int8)
    cdef signed char[:] o = out
    with nogil:
        for j in range(n):
            o[j] = _compare(a[j], b[j])
    return out


def compare_to(const int64_t[:, :] a, const int64_t[:] t):
    cdef Py_ssize_t n = a.shape[0], j
    out = np.empty(n, dtype=np.int8)
    cdef signed char[:] o = out
    with nogil:
        for j in range(n):
            o[j] = _compare(a[j], t)
    return out


def compare_matrix(const int64_t[:, :] a):
    cdef Py_ssize_t n = a.shape[0], i, j
    out = np.empty((n, n), dtype=np.int8)
    cdef signed char[:, :] o = out
    with nogil:
        for i in range(n):
            o[i, i] = 0
            for j in range(i + 1, n):
                o[i, j] = _compare(a[i], a[j])
                o[j, i] = -o[i, j]
    return out


def separation_scan(const int64_t[:] t, int k):
    """Smallest sup-distance from ``t`` to a point of N^d whose scale-k
    projection strictly precedes that of ``t``; -1 if there is none."""
    cdef Py_ssize_t d = t.shape[0], i
    cdef int64_t side = (<int64_t>1) << k
    cdef int64_t radius = side
    cdef int64_t best = -1, dist, v
    cdef bint any_pos = False
    pt = np.empty(d, dtype=np.int64)
    q = np.empty(d, dtype=np.int64)
    off = np.empty(d, dtype=np.int64)
    cdef int64_t[:] p = pt
    cdef int64_t[:] pq = q
    cdef int64_t[:] o = off
    for i in range(d):
        p[i] = (t[i] >> k) << k
        if p[i] > 0:
            any_pos = True
    if not any_pos:
        return -1
    for i in range(d):
        o[i] = -radius
    with nogil:
        while True:
            dist = 0
            for i in range(d):
                v = t[i] + o[i]
                if v < 0:
                    dist = -1
                    break
                pq[i] = (v >> k) << k
                if o[i] > dist:
                    dist = o[i]
                elif -o[i] > dist:
                    dist = -o[i]
            if dist >= 0 and (best < 0 or dist < best):
                if _compare(pq, p) < 0:
                    best = dist
            i = 0
            while i < d:
                o[i] += 1
                if o[i] <= radius:
                    break
                o[i] = -radius
                i += 1
            if i == d:
                break
    return best
