"""NumPy reference implementations of the training hot kernels.

These define the kernel contract. The Cython backend in ``_core`` mirrors
every function here and must agree to float tolerance on any single call
(bit-identical results are only guaranteed within one backend, because the
two backends may reduce sums in different orders).

All 2-D float arrays are C-contiguous float64; index arrays are int64.
Functions that update parameters do so in place.
"""

import numpy as np


def backend_name():
    return "numpy"


def sigmoid(x):
    """Numerically stable logistic function, elementwise."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def soft_threshold(v, g):
    """sign(v) * max(|v| - g, 0); ``g`` broadcasts against ``v``."""
    return np.sign(v) * np.maximum(np.abs(v) - g, 0.0)


def soft_threshold_backward(dvhat, vhat):
    """Backward of the soft threshold under the kept-entry sub-gradient.

    Returns ``(dv, dsraw)`` where ``dv`` is the gradient w.r.t. the raw
    weights (upstream times the nonzero indicator) and ``dsraw`` is the
    per-entry threshold contribution before the g'(s) factor, i.e.
    ``-sign(v) * upstream`` at surviving entries and 0 at pruned ones.
    Survivors keep the sign of the raw weight, so sign(vhat) is used.
    """
    sgn = np.sign(vhat)
    dv = dvhat * np.abs(sgn)
    dsraw = -sgn * dvhat
    return dv, dsraw


def fm_forward(rows):
    """Pairwise-interaction term of a factorization machine.

    ``rows`` has shape (B, M, d). Returns ``(pair, svec)`` where
    ``pair[b] = 0.5 * sum_k [ (sum_i rows[b,i,k])^2 - sum_i rows[b,i,k]^2 ]``
    and ``svec`` is the per-sample sum over fields (kept for backward).
    """
    svec = rows.sum(axis=1)
    pair = 0.5 * ((svec * svec).sum(axis=1) - (rows * rows).sum(axis=(1, 2)))
    return pair, svec


def fm_backward(dlogit, rows, svec):
    """Gradient of the pairwise term w.r.t. the embedding rows."""
    return dlogit[:, None, None] * (svec[:, None, :] - rows)


def scatter_add_rows(out, idx, rows):
    """out[idx[k], :] += rows[k, :] with duplicate indices accumulated."""
    np.add.at(out, idx, rows)


def scatter_add_vec(out, idx, vals):
    """out[idx[k]] += vals[k] with duplicate indices accumulated."""
    np.add.at(out, idx, vals)


def adam_update(param, m, v, grad, t, lr, beta1, beta2, eps):
    """One bias-corrected Adam step, in place, on flat float64 arrays."""
    m *= beta1
    m += (1.0 - beta1) * grad
    v *= beta2
    v += (1.0 - beta2) * grad * grad
    mhat = m / (1.0 - beta1**t)
    vhat = v / (1.0 - beta2**t)
    param -= lr * mhat / (np.sqrt(vhat) + eps)


def adam_update_masked(param, m, v, grad, mask, t, lr, beta1, beta2, eps):
    """Adam step with the gradient zeroed at masked-out entries first.

    Zeroing happens before the moment update, so moments of masked entries
    stay exactly zero and the parameter never moves there.
    """
    adam_update(param, m, v, grad * mask, t, lr, beta1, beta2, eps)
