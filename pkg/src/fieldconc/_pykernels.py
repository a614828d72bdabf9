"""Numpy fallback for the batch order kernels.

Same call signatures and results as the compiled ``_ckernels`` module.
"""
import itertools

import numpy as np


def _bitlen(x):
    # bit length of non-negative int64 values, vectorised
    out = np.zeros(x.shape, dtype=np.int64)
    x = x.copy()
    while True:
        nz = x != 0
        if not nz.any():
            return out
        out[nz] += 1
        x >>= 1


def kappa_many(a, b):
    acc = np.bitwise_or.reduce(np.bitwise_xor(a, b), axis=1)
    return _bitlen(acc) - 1


def _compare_from_kappa(a, b, k):
    out = np.zeros(a.shape[0], dtype=np.int8)
    diff = k >= 0
    if not diff.any():
        return out
    kk = k[diff][:, None]
    x = a[diff] >> kk
    y = b[diff] >> kk
    neq = x != y
    first = np.argmax(neq, axis=1)
    rows = np.arange(x.shape[0])
    out[diff] = np.where(x[rows, first] < y[rows, first], -1, 1)
    return out


def compare_many(a, b):
    return _compare_from_kappa(a, b, kappa_many(a, b))


def compare_to(a, t):
    b = np.broadcast_to(np.asarray(t, dtype=np.int64), a.shape)
    return compare_many(a, b)


def compare_matrix(a):
    n = a.shape[0]
    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    out = compare_many(a[i.ravel()], a[j.ravel()])
    return out.reshape(n, n)


def separation_scan(t, k):
    t = np.asarray(t, dtype=np.int64)
    p = (t >> k) << k
    if not (p > 0).any():
        return -1
    r = 1 << k
    offs = np.array(list(itertools.product(range(-r, r + 1), repeat=t.shape[0])),
                    dtype=np.int64)
    pts = t[None, :] + offs
    keep = (pts >= 0).all(axis=1)
    pts, offs = pts[keep], offs[keep]
    proj = (pts >> k) << k
    pred = compare_to(proj, p) < 0
    if not pred.any():
        return -1
    return int(np.abs(offs[pred]).max(axis=1).min())
