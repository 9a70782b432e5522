"""Pure-numpy implementations of the hot kernels.

This is the fallback backend; the compiled extension in ``_cykernels.pyx``
implements the same functions with the same semantics.  Callers flatten
inputs so that elementwise kernels receive any-dimensional arrays and the
row kernels receive C-contiguous 2-D (rows, cols) arrays, with
normalization/softmax taken along the last axis.
"""

from __future__ import annotations

import numpy as np

# tanh-form GELU constants: sqrt(2/pi) and the cubic coefficient.
GELU_C = 0.7978845608028654
GELU_A = 0.044715


def relu_fwd(x):
    return np.maximum(x, 0.0)


def relu_bwd(x, gy):
    return np.where(x > 0.0, gy, 0.0)


def gelu_fwd(x):
    inner = GELU_C * (x + GELU_A * x * x * x)
    return 0.5 * x * (1.0 + np.tanh(inner))


def gelu_bwd(x, gy):
    inner = GELU_C * (x + GELU_A * x * x * x)
    t = np.tanh(inner)
    sech2 = 1.0 - t * t
    local = 0.5 * (1.0 + t) + 0.5 * x * sech2 * GELU_C * (1.0 + 3.0 * GELU_A * x * x)
    return gy * local


def softmax_rows(x):
    shifted = x - np.max(x, axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=1, keepdims=True)


def softmax_rows_bwd(p, gy):
    inner = np.sum(gy * p, axis=1, keepdims=True)
    return p * (gy - inner)


def logsumexp_rows(x):
    m = np.max(x, axis=1)
    return m + np.log(np.sum(np.exp(x - m[:, None]), axis=1))


def layernorm_rows_fwd(x, gamma, beta, eps):
    mean = np.mean(x, axis=1)
    var = np.mean((x - mean[:, None]) ** 2, axis=1)
    rstd = 1.0 / np.sqrt(var + eps)
    xhat = (x - mean[:, None]) * rstd[:, None]
    y = gamma[None, :] * xhat + beta[None, :]
    return y, mean, rstd


def layernorm_rows_bwd(x, gamma, mean, rstd, gy):
    xhat = (x - mean[:, None]) * rstd[:, None]
    dxhat = gy * gamma[None, :]
    m1 = np.mean(dxhat, axis=1, keepdims=True)
    m2 = np.mean(dxhat * xhat, axis=1, keepdims=True)
    gx = rstd[:, None] * (dxhat - m1 - xhat * m2)
    dgamma = np.sum(gy * xhat, axis=0)
    dbeta = np.sum(gy, axis=0)
    return gx, dgamma, dbeta
