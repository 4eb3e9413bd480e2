# Compiled hot kernels. Mirrors embedprune.kernels.pyref; see that module
# for the contract each function satisfies.

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, sqrt

cnp.import_array()


def backend_name():
    return "cython"


cdef inline double _sigmoid1(double x) nogil:
    cdef double e
    if x >= 0.0:
        return 1.0 / (1.0 + exp(-x))
    e = exp(x)
    return e / (1.0 + e)


def sigmoid(x):
    x = np.ascontiguousarray(x, dtype=np.float64)
    out = np.empty_like(x)
    cdef double[::1] xf = x.ravel()
    cdef double[::1] of = out.ravel()
    cdef Py_ssize_t i, n = xf.shape[0]
    for i in range(n):
        of[i] = _sigmoid1(xf[i])
    return out


cdef inline double _sthr1(double v, double g) nogil:
    if v > g:
        return v - g
    if v < -g:
        return v + g
    return 0.0


def soft_threshold(v, g):
    cdef cnp.ndarray varr = np.ascontiguousarray(v, dtype=np.float64)
    out = np.empty_like(varr)
    cdef double[:, ::1] v2, o2, g2
    cdef double[::1] gv
    cdef double gs
    cdef Py_ssize_t i, j, n, d

    if varr.ndim == 1:
        varr = varr.reshape(1, -1)
        out = out.reshape(1, -1)
        squeeze = True
    else:
        squeeze = False
    v2 = varr
    o2 = out
    n = v2.shape[0]
    d = v2.shape[1]

    garr = np.asarray(g, dtype=np.float64)
    if garr.ndim == 0:
        gs = garr
        for i in range(n):
            for j in range(d):
                o2[i, j] = _sthr1(v2[i, j], gs)
    elif garr.ndim == 1 and garr.shape[0] == d:
        gv = np.ascontiguousarray(garr)
        for i in range(n):
            for j in range(d):
                o2[i, j] = _sthr1(v2[i, j], gv[j])
    elif garr.ndim == 2 and garr.shape[1] == 1 and garr.shape[0] == n:
        gv = np.ascontiguousarray(garr.ravel())
        for i in range(n):
            for j in range(d):
                o2[i, j] = _sthr1(v2[i, j], gv[i])
    elif garr.ndim == 2 and garr.shape[0] == n and garr.shape[1] == d:
        g2 = np.ascontiguousarray(garr)
        for i in range(n):
            for j in range(d):
                o2[i, j] = _sthr1(v2[i, j], g2[i, j])
    else:
        raise ValueError(f"threshold shape {garr.shape} incompatible with {varr.shape}")
    return out[0] if squeeze else out


def soft_threshold_backward(dvhat, vhat):
    cdef double[:, ::1] dv2 = np.ascontiguousarray(dvhat, dtype=np.float64)
    cdef double[:, ::1] vh2 = np.ascontiguousarray(vhat, dtype=np.float64)
    dv = np.empty((dv2.shape[0], dv2.shape[1]), dtype=np.float64)
    dsraw = np.empty_like(dv)
    cdef double[:, ::1] dvo = dv
    cdef double[:, ::1] dso = dsraw
    cdef Py_ssize_t i, j
    cdef double vh, up
    for i in range(dv2.shape[0]):
        for j in range(dv2.shape[1]):
            vh = vh2[i, j]
            up = dv2[i, j]
            if vh > 0.0:
                dvo[i, j] = up
                dso[i, j] = -up
            elif vh < 0.0:
                dvo[i, j] = up
                dso[i, j] = up
            else:
                dvo[i, j] = 0.0
                dso[i, j] = 0.0
    return dv, dsraw


def fm_forward(rows):
    cdef double[:, :, ::1] r = np.ascontiguousarray(rows, dtype=np.float64)
    cdef Py_ssize_t B = r.shape[0], M = r.shape[1], d = r.shape[2]
    pair = np.empty(B, dtype=np.float64)
    svec = np.empty((B, d), dtype=np.float64)
    cdef double[::1] p = pair
    cdef double[:, ::1] s = svec
    cdef Py_ssize_t b, i, k
    cdef double acc, sq, x
    for b in range(B):
        sq = 0.0
        for k in range(d):
            acc = 0.0
            for i in range(M):
                x = r[b, i, k]
                acc += x
                sq += x * x
            s[b, k] = acc
        acc = 0.0
        for k in range(d):
            acc += s[b, k] * s[b, k]
        p[b] = 0.5 * (acc - sq)
    return pair, svec


def fm_backward(dlogit, rows, svec):
    cdef double[::1] dl = np.ascontiguousarray(dlogit, dtype=np.float64)
    cdef double[:, :, ::1] r = np.ascontiguousarray(rows, dtype=np.float64)
    cdef double[:, ::1] s = np.ascontiguousarray(svec, dtype=np.float64)
    cdef Py_ssize_t B = r.shape[0], M = r.shape[1], d = r.shape[2]
    drows = np.empty((B, M, d), dtype=np.float64)
    cdef double[:, :, ::1] o = drows
    cdef Py_ssize_t b, i, k
    cdef double g
    for b in range(B):
        g = dl[b]
        for i in range(M):
            for k in range(d):
                o[b, i, k] = g * (s[b, k] - r[b, i, k])
    return drows


def scatter_add_rows(out, idx, rows):
    cdef double[:, ::1] o = out
    cdef cnp.int64_t[::1] ix = np.ascontiguousarray(idx, dtype=np.int64)
    cdef double[:, ::1] r = np.ascontiguousarray(rows, dtype=np.float64)
    cdef Py_ssize_t k, j, K = ix.shape[0], d = r.shape[1]
    cdef Py_ssize_t row
    for k in range(K):
        row = ix[k]
        for j in range(d):
            o[row, j] += r[k, j]


def scatter_add_vec(out, idx, vals):
    cdef double[::1] o = out
    cdef cnp.int64_t[::1] ix = np.ascontiguousarray(idx, dtype=np.int64)
    cdef double[::1] v = np.ascontiguousarray(vals, dtype=np.float64)
    cdef Py_ssize_t k, K = ix.shape[0]
    for k in range(K):
        o[ix[k]] += v[k]


def adam_update(param, m, v, grad, t, lr, beta1, beta2, eps):
    cdef double[::1] p = param
    cdef double[::1] mm = m
    cdef double[::1] vv = v
    cdef double[::1] g = np.ascontiguousarray(grad, dtype=np.float64)
    cdef double c1 = 1.0 - beta1 ** t
    cdef double c2 = 1.0 - beta2 ** t
    cdef double b1 = beta1, b2 = beta2, a = lr, e = eps
    cdef Py_ssize_t i, n = p.shape[0]
    cdef double gi, mh, vh
    for i in range(n):
        gi = g[i]
        mm[i] = b1 * mm[i] + (1.0 - b1) * gi
        vv[i] = b2 * vv[i] + (1.0 - b2) * gi * gi
        mh = mm[i] / c1
        vh = vv[i] / c2
        p[i] -= a * mh / (sqrt(vh) + e)


def adam_update_masked(param, m, v, grad, mask, t, lr, beta1, beta2, eps):
    cdef double[::1] p = param
    cdef double[::1] mm = m
    cdef double[::1] vv = v
    cdef double[::1] g = np.ascontiguousarray(grad, dtype=np.float64)
    cdef double[::1] msk = np.ascontiguousarray(mask, dtype=np.float64)
    cdef double c1 = 1.0 - beta1 ** t
    cdef double c2 = 1.0 - beta2 ** t
    cdef double b1 = beta1, b2 = beta2, a = lr, e = eps
    cdef Py_ssize_t i, n = p.shape[0]
    cdef double gi, mh, vh
    for i in range(n):
        gi = g[i] * msk[i]
        mm[i] = b1 * mm[i] + (1.0 - b1) * gi
        vv[i] = b2 * vv[i] + (1.0 - b2) * gi * gi
        mh = mm[i] / c1
        vh = vv[i] / c2
        p[i] -= a * mh / (sqrt(vh) + e)
