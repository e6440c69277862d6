"""Linear SVM trained with Pegasos-style stochastic subgradient descent."""

from __future__ import annotations

import numpy as np


def pegasos_train(X: np.ndarray, y01: np.ndarray, lam: float, epochs: int,
                  seed: int, sample_weight=None):
    """Hinge loss + L2(lam) with step size 1/(lam * t).

    y01 holds {0,1} labels; internally mapped to {-1,+1}. The bias is
    updated on margin violations but not regularized. Deterministic given
    the seed (per-epoch shuffles come from one PCG64 stream).
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    n, d = X.shape
    y = np.where(np.asarray(y01) > 0, 1.0, -1.0)
    w = np.zeros(d)
    b = 0.0
    t = 0
    for _ in range(epochs):
        order = rng.permutation(n)
        for idx in order:
            t += 1
            eta = 1.0 / (lam * t)
            margin = y[idx] * (X[idx] @ w + b)
            w *= 1.0 - eta * lam
            if margin < 1.0:
                scale = eta * (sample_weight[idx] if sample_weight is not None else 1.0)
                w += scale * y[idx] * X[idx]
                b += scale * y[idx]
    return w, np.array([b])
