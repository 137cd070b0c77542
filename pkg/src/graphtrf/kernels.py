"""Numeric inner loops for router training.

Each kernel has a vectorised numpy version and a loop version compiled with
numba; the loop version still hands matrix products to BLAS through np.dot. The numba path is used when numba imports and ``GRAPHTRF_DISABLE_NUMBA``
is unset (or ``0``). Results agree to floating-point round-off, not bit for
bit, so a trained model records which backend produced it.
"""

from __future__ import annotations

import math
import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

_disabled = os.environ.get("GRAPHTRF_DISABLE_NUMBA", "0").strip().lower() not in ("", "0", "false", "no")
HAVE_NUMBA = numba is not None
USE_NUMBA = HAVE_NUMBA and not _disabled


def backend(batch: int | None = None) -> str:
    """Backend that runs training steps (for ``batch``, if given)."""
    if not USE_NUMBA or (batch is not None and batch > NUMBA_MAX_BATCH):
        return "numpy"
    return "numba"


# ---------------------------------------------------------------------------
# numpy path


def _softplus(z):
    return np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z)))


def bce_loss_grad_np(X, Y, W, b):
    """Mean over rows of the per-row summed binary cross-entropy, and its gradient."""
    m = X.shape[0]
    Z = X @ W.T + b
    loss = float((_softplus(Z) - Y * Z).sum() / m)
    # tanh form of the sigmoid cannot overflow
    D = (0.5 * (1.0 + np.tanh(0.5 * Z)) - Y) / m
    return loss, D.T @ X, D.sum(axis=0)


def sgd_epoch_np(X, Y, W, b, order, batch, lr, l2):
    for start in range(0, order.shape[0], batch):
        idx = order[start:start + batch]
        _, gW, gb = bce_loss_grad_np(X[idx], Y[idx], W, b)
        W -= lr * (gW + l2 * W)
        b -= lr * gb


# ---------------------------------------------------------------------------
# numba path


def _sigmoid_residual(Z, Y, m):
    """(sigmoid(Z) - Y) / m and the summed loss, computed elementwise without overflow."""
    D = np.empty(Z.shape)
    loss = 0.0
    for i in range(Z.shape[0]):
        for f in range(Z.shape[1]):
            z = Z[i, f]
            loss += max(z, 0.0) + math.log1p(math.exp(-abs(z))) - Y[i, f] * z
            if z >= 0:
                p = 1.0 / (1.0 + math.exp(-z))
            else:
                e = math.exp(z)
                p = e / (1.0 + e)
            D[i, f] = (p - Y[i, f]) / m
    return D, loss


def _bce_loss_grad_loop(X, Y, W, b):
    m = X.shape[0]
    Z = np.dot(X, W.T) + b
    D, loss = _sigmoid_residual(Z, Y, m)
    return loss / m, np.dot(D.T, X), D.sum(axis=0)


def _sgd_epoch_loop(X, Y, W, b, order, batch, lr, l2):
    # gathers each batch and keeps the matrix products in BLAS; the per-batch
    # python overhead of the numpy path is what this saves
    n = order.shape[0]
    d = X.shape[1]
    k = W.shape[0]
    start = 0
    while start < n:
        stop = min(start + batch, n)
        m = stop - start
        Xb = np.empty((m, d))
        Yb = np.empty((m, k))
        for r in range(m):
            Xb[r] = X[order[start + r]]
            Yb[r] = Y[order[start + r]]
        Z = np.dot(Xb, W.T) + b
        D, _ = _sigmoid_residual(Z, Yb, m)
        gW = np.dot(D.T, Xb)
        for f in range(k):
            gb = 0.0
            for r in range(m):
                gb += D[r, f]
            for j in range(d):
                W[f, j] -= lr * (gW[f, j] + l2 * W[f, j])
            b[f] -= lr * gb
        start = stop


if HAVE_NUMBA:
    _sigmoid_residual = numba.njit(cache=True)(_sigmoid_residual)
    bce_loss_grad_nb = numba.njit(cache=True)(_bce_loss_grad_loop)
    sgd_epoch_nb = numba.njit(cache=True)(_sgd_epoch_loop)
else:  # pragma: no cover
    bce_loss_grad_nb = _bce_loss_grad_loop
    sgd_epoch_nb = _sgd_epoch_loop


def _f64(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def bce_loss_grad(X, Y, W, b):
    X, Y, W, b = _f64(X), _f64(Y), _f64(W), _f64(b)
    if USE_NUMBA:
        loss, gW, gb = bce_loss_grad_nb(X, Y, W, b)
        return float(loss), gW, gb
    return bce_loss_grad_np(X, Y, W, b)


# above this batch size the vectorised numpy step is already BLAS-bound and
# beats the compiled loop (see benchmarks/bench_kernels.py)
NUMBA_MAX_BATCH = 32


def sgd_epoch(X, Y, W, b, order, batch: int, lr: float, l2: float) -> None:
    """One pass of mini-batch gradient descent over ``order``; updates W and b in place."""
    order = np.ascontiguousarray(order, dtype=np.int64)
    if USE_NUMBA and batch <= NUMBA_MAX_BATCH:
        sgd_epoch_nb(X, Y, W, b, order, int(batch), float(lr), float(l2))
    else:
        sgd_epoch_np(X, Y, W, b, order, int(batch), float(lr), float(l2))

