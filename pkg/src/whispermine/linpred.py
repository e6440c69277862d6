"""Linear prediction via the Levinson-Durbin recursion.

Sign convention: the returned coefficients predict forward,
x_hat[n] = sum_k a[k] * x[n - k - 1], i.e. they solve the Toeplitz normal
equations R a = r directly (no leading 1, no negation).
"""

from __future__ import annotations

import numpy as np

from .errors import NumericalError


def levinson_durbin(autocorr: np.ndarray, order: int | None = None):
    """Solve the Toeplitz normal equations for one or many autocorrelations.

    autocorr: shape (p+1,) or (n, p+1), lags 0..p. order defaults to p.
    Returns (a, err) with a of shape (..., order) and err the final
    prediction error power (> 0 for positive-definite input).

    Raises NumericalError when r0 <= 0 or when a reflection coefficient
    reaches magnitude 1 (singular / non-positive-definite system).
    """
    r = np.asarray(autocorr, dtype=np.float64)
    single = r.ndim == 1
    if single:
        r = r[None, :]
    if order is None:
        order = r.shape[1] - 1
    if order < 1:
        raise ValueError("order must be >= 1")
    if r.shape[1] < order + 1:
        raise ValueError(f"need {order + 1} autocorrelation lags, got {r.shape[1]}")
    if not np.all(np.isfinite(r)):
        raise NumericalError("non-finite autocorrelation input")
    if np.any(r[:, 0] <= 0):
        raise NumericalError("autocorrelation lag 0 must be positive")

    n = r.shape[0]
    a = np.zeros((n, order))
    err = r[:, 0].copy()
    for i in range(1, order + 1):
        acc = r[:, i].copy()
        if i > 1:
            # sum_j a[j] * r[i-j] for j = 1..i-1
            acc -= np.einsum("nj,nj->n", a[:, :i - 1], r[:, i - 1:0:-1])
        k = acc / err
        if np.any(np.abs(k) >= 1.0):
            raise NumericalError(
                "reflection coefficient magnitude reached 1; "
                "autocorrelation is not positive definite"
            )
        if i > 1:
            a[:, :i - 1] -= k[:, None] * a[:, i - 2::-1]
        a[:, i - 1] = k
        err *= 1.0 - k * k

    if single:
        return a[0], float(err[0])
    return a, err


def toeplitz_solve(autocorr: np.ndarray, order: int | None = None):
    """Direct dense solve of the same normal equations (oracle path).

    Kept deliberately independent of levinson_durbin: builds the full
    Toeplitz matrix and calls a generic linear solver.
    """
    r = np.asarray(autocorr, dtype=np.float64)
    if order is None:
        order = len(r) - 1
    idx = np.abs(np.subtract.outer(np.arange(order), np.arange(order)))
    R = r[idx]
    return np.linalg.solve(R, r[1:order + 1])
