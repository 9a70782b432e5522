# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot kernels: elementwise activations and fused row reductions.

Semantics match ``_numpy_impl`` (reductions here are sequential rather than
pairwise, so results can differ from the numpy backend in the last couple of
bits; both backends are internally deterministic).
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, log, sqrt, tanh

cnp.import_array()

GELU_C = 0.7978845608028654
GELU_A = 0.044715

cdef double _GELU_C = 0.7978845608028654
cdef double _GELU_A = 0.044715


def relu_fwd(object x):
    cdef cnp.ndarray xf = np.ascontiguousarray(x, dtype=np.float64)
    cdef cnp.ndarray out = np.empty_like(xf)
    cdef const double[::1] xv = xf.ravel()
    cdef double[::1] ov = out.ravel()
    cdef Py_ssize_t i, n = xv.shape[0]
    for i in range(n):
        ov[i] = xv[i] if xv[i] > 0.0 else 0.0
    return out


def relu_bwd(object x, object gy):
    cdef cnp.ndarray xf = np.ascontiguousarray(x, dtype=np.float64)
    cdef cnp.ndarray gf = np.ascontiguousarray(gy, dtype=np.float64)
    cdef cnp.ndarray out = np.empty_like(xf)
    cdef const double[::1] xv = xf.ravel()
    cdef const double[::1] gv = gf.ravel()
    cdef double[::1] ov = out.ravel()
    cdef Py_ssize_t i, n = xv.shape[0]
    for i in range(n):
        ov[i] = gv[i] if xv[i] > 0.0 else 0.0
    return out


def gelu_fwd(object x):
    cdef cnp.ndarray xf = np.ascontiguousarray(x, dtype=np.float64)
    cdef cnp.ndarray out = np.empty_like(xf)
    cdef const double[::1] xv = xf.ravel()
    cdef double[::1] ov = out.ravel()
    cdef Py_ssize_t i, n = xv.shape[0]
    cdef double v
    for i in range(n):
        v = xv[i]
        ov[i] = 0.5 * v * (1.0 + tanh(_GELU_C * (v + _GELU_A * v * v * v)))
    return out


def gelu_bwd(object x, object gy):
    cdef cnp.ndarray xf = np.ascontiguousarray(x, dtype=np.float64)
    cdef cnp.ndarray gf = np.ascontiguousarray(gy, dtype=np.float64)
    cdef cnp.ndarray out = np.empty_like(xf)
    cdef const double[::1] xv = xf.ravel()
    cdef const double[::1] gv = gf.ravel()
    cdef double[::1] ov = out.ravel()
    cdef Py_ssize_t i, n = xv.shape[0]
    cdef double v, t, sech2, local
    for i in range(n):
        v = xv[i]
        t = tanh(_GELU_C * (v + _GELU_A * v * v * v))
        sech2 = 1.0 - t * t
        local = 0.5 * (1.0 + t) + 0.5 * v * sech2 * _GELU_C * (1.0 + 3.0 * _GELU_A * v * v)
        ov[i] = gv[i] * local
    return out


def softmax_rows(object x):
    cdef cnp.ndarray xf = np.ascontiguousarray(x, dtype=np.float64)
    cdef cnp.ndarray out = np.empty_like(xf)
    cdef const double[:, ::1] xv = xf
    cdef double[:, ::1] ov = out
    cdef Py_ssize_t r, c, rows = xv.shape[0], cols = xv.shape[1]
    cdef double m, s
    for r in range(rows):
        m = xv[r, 0]
        for c in range(1, cols):
            if xv[r, c] > m:
                m = xv[r, c]
        s = 0.0
        for c in range(cols):
            ov[r, c] = exp(xv[r, c] - m)
            s += ov[r, c]
        for c in range(cols):
            ov[r, c] /= s
    return out


def softmax_rows_bwd(object p, object gy):
    cdef cnp.ndarray pf = np.ascontiguousarray(p, dtype=np.float64)
    cdef cnp.ndarray gf = np.ascontiguousarray(gy, dtype=np.float64)
    cdef cnp.ndarray out = np.empty_like(pf)
    cdef const double[:, ::1] pv = pf
    cdef const double[:, ::1] gv = gf
    cdef double[:, ::1] ov = out
    cdef Py_ssize_t r, c, rows = pv.shape[0], cols = pv.shape[1]
    cdef double inner
    for r in range(rows):
        inner = 0.0
        for c in range(cols):
            inner += gv[r, c] * pv[r, c]
        for c in range(cols):
            ov[r, c] = pv[r, c] * (gv[r, c] - inner)
    return out


def logsumexp_rows(object x):
    cdef cnp.ndarray xf = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t rows = xf.shape[0], cols = xf.shape[1]
    cdef cnp.ndarray out = np.empty(rows, dtype=np.float64)
    cdef const double[:, ::1] xv = xf
    cdef double[::1] ov = out
    cdef Py_ssize_t r, c
    cdef double m, s
    for r in range(rows):
        m = xv[r, 0]
        for c in range(1, cols):
            if xv[r, c] > m:
                m = xv[r, c]
        s = 0.0
        for c in range(cols):
            s += exp(xv[r, c] - m)
        ov[r] = m + log(s)
    return out


def layernorm_rows_fwd(object x, object gamma, object beta, double eps):
    cdef cnp.ndarray xf = np.ascontiguousarray(x, dtype=np.float64)
    cdef cnp.ndarray gmf = np.ascontiguousarray(gamma, dtype=np.float64)
    cdef cnp.ndarray btf = np.ascontiguousarray(beta, dtype=np.float64)
    cdef Py_ssize_t rows = xf.shape[0], cols = xf.shape[1]
    cdef cnp.ndarray y = np.empty_like(xf)
    cdef cnp.ndarray mean = np.empty(rows, dtype=np.float64)
    cdef cnp.ndarray rstd = np.empty(rows, dtype=np.float64)
    cdef const double[:, ::1] xv = xf
    cdef double[:, ::1] yv = y
    cdef const double[::1] gm = gmf
    cdef const double[::1] bt = btf
    cdef double[::1] mv = mean
    cdef double[::1] rv = rstd
    cdef Py_ssize_t r, c
    cdef double m, var, d, rs
    for r in range(rows):
        m = 0.0
        for c in range(cols):
            m += xv[r, c]
        m /= cols
        var = 0.0
        for c in range(cols):
            d = xv[r, c] - m
            var += d * d
        var /= cols
        rs = 1.0 / sqrt(var + eps)
        mv[r] = m
        rv[r] = rs
        for c in range(cols):
            yv[r, c] = gm[c] * ((xv[r, c] - m) * rs) + bt[c]
    return y, mean, rstd


def layernorm_rows_bwd(object x, object gamma, object mean, object rstd, object gy):
    cdef cnp.ndarray xf = np.ascontiguousarray(x, dtype=np.float64)
    cdef cnp.ndarray gmf = np.ascontiguousarray(gamma, dtype=np.float64)
    cdef cnp.ndarray mnf = np.ascontiguousarray(mean, dtype=np.float64)
    cdef cnp.ndarray rsf = np.ascontiguousarray(rstd, dtype=np.float64)
    cdef cnp.ndarray gyf = np.ascontiguousarray(gy, dtype=np.float64)
    cdef Py_ssize_t rows = xf.shape[0], cols = xf.shape[1]
    cdef cnp.ndarray gx = np.empty_like(xf)
    cdef cnp.ndarray dgamma = np.zeros(cols, dtype=np.float64)
    cdef cnp.ndarray dbeta = np.zeros(cols, dtype=np.float64)
    cdef const double[:, ::1] xv = xf
    cdef const double[:, ::1] gv = gyf
    cdef double[:, ::1] ov = gx
    cdef const double[::1] gm = gmf
    cdef const double[::1] mv = mnf
    cdef const double[::1] rv = rsf
    cdef double[::1] dgm = dgamma
    cdef double[::1] dbt = dbeta
    cdef Py_ssize_t r, c
    cdef double m1, m2, xhat, dxhat
    for r in range(rows):
        m1 = 0.0
        m2 = 0.0
        for c in range(cols):
            xhat = (xv[r, c] - mv[r]) * rv[r]
            dxhat = gv[r, c] * gm[c]
            m1 += dxhat
            m2 += dxhat * xhat
            dgm[c] += gv[r, c] * xhat
            dbt[c] += gv[r, c]
        m1 /= cols
        m2 /= cols
        for c in range(cols):
            xhat = (xv[r, c] - mv[r]) * rv[r]
            dxhat = gv[r, c] * gm[c]
            ov[r, c] = rv[r] * (dxhat - m1 - xhat * m2)
    return gx, dgamma, dbeta
