"""2D projections of snippet embeddings: PCA and exact t-SNE.

Exact (quadratic) t-SNE only: labelling sessions stay in the thousands of
points, where the O(n^2) affinities are cheap and there is no reason to
pay the complexity of tree approximations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import NumericalError

TSNE_EARLY_EXAGGERATION = 4.0
TSNE_EXAGGERATION_ITERS = 100
TSNE_MOMENTUM_SWITCH_ITER = 250
TSNE_LEARNING_RATE = 200.0
ENTROPY_TOL = 1e-5


def project_pca(embeddings: np.ndarray, n_components: int = 2):
    """Mean-centered projection onto the top principal axes.

    Sign convention: each axis is flipped so its largest-magnitude
    component is positive, making the output deterministic.
    Returns (coords (n, k), axes (dim, k), explained_variance (k,)).
    """
    X = np.asarray(embeddings, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 3:
        raise ValueError("PCA needs at least 3 points")
    centered = X - X.mean(axis=0)
    cov = centered.T @ centered / len(X)
    eigval, eigvec = np.linalg.eigh(cov)
    order = np.argsort(eigval)[::-1][:n_components]
    axes = eigvec[:, order]
    for j in range(axes.shape[1]):
        k = np.argmax(np.abs(axes[:, j]))
        if axes[k, j] < 0:
            axes[:, j] = -axes[:, j]
    return centered @ axes, axes, eigval[order]


def _calibrate_affinities(sq_dists: np.ndarray, perplexity: float):
    """Per-point binary search of the Gaussian precision so the conditional
    distribution's entropy matches log(perplexity) within ENTROPY_TOL."""
    n = sq_dists.shape[0]
    target = np.log(perplexity)
    P = np.zeros((n, n))
    for i in range(n):
        d = np.delete(sq_dists[i], i)
        beta, beta_min, beta_max = 1.0, 0.0, np.inf
        for _ in range(200):
            w = np.exp(-d * beta)
            s = w.sum()
            if s <= 0:
                entropy = 0.0
                p = np.zeros_like(w)
            else:
                p = w / s
                entropy = float(np.log(s) + beta * np.dot(d, p))
            diff = entropy - target
            if abs(diff) <= ENTROPY_TOL:
                break
            if diff > 0:
                beta_min = beta
                beta = beta * 2.0 if not np.isfinite(beta_max) else (beta + beta_max) / 2.0
            else:
                beta_max = beta
                beta = beta / 2.0 if beta_min == 0.0 else (beta + beta_min) / 2.0
        else:
            raise NumericalError(
                f"perplexity calibration did not converge for point {i}")
        row = np.zeros(n)
        row[np.arange(n) != i] = p
        P[i] = row
    return P


@dataclass
class TsneResult:
    coords: np.ndarray
    kl_trace: np.ndarray  # KL(P || Q) per iteration, true (unexaggerated) P


def project_tsne(embeddings: np.ndarray, perplexity: float = 30.0,
                 iters: int = 1000, seed: int = 0) -> TsneResult:
    """Exact t-SNE with entropy-calibrated Gaussian affinities.

    Early exaggeration x4 for the first 100 iterations; plain momentum
    gradient descent (0.5 until iteration 250, then 0.8) at learning rate
    200; PCA pre-reduction to min(50, dim); deterministic given the seed.
    """
    X = np.asarray(embeddings, dtype=np.float64)
    n = len(X)
    if n < 5:
        raise ValueError("t-SNE needs at least 5 points")
    if not perplexity < (n - 1) / 3:
        raise ValueError(f"perplexity {perplexity} infeasible for n={n}; "
                         f"needs perplexity < (n-1)/3")

    k = min(50, X.shape[1])
    if X.shape[1] > k:
        X, _, _ = project_pca(X, n_components=k)
    else:
        X = X - X.mean(axis=0)

    sq = np.sum(X ** 2, axis=1)
    sq_dists = np.maximum(sq[:, None] + sq[None, :] - 2.0 * X @ X.T, 0.0)
    cond = _calibrate_affinities(sq_dists, perplexity)
    P = (cond + cond.T) / (2.0 * n)
    P = np.maximum(P, 1e-12)

    rng = np.random.Generator(np.random.PCG64(seed))
    Y = rng.normal(scale=1e-4, size=(n, 2))
    update = np.zeros_like(Y)
    kl_trace = np.zeros(iters)
    eye = np.eye(n, dtype=bool)

    def q_and_kl(pts):
        sqy = np.sum(pts ** 2, axis=1)
        num = 1.0 / (1.0 + np.maximum(sqy[:, None] + sqy[None, :] - 2.0 * pts @ pts.T, 0.0))
        num[eye] = 0.0
        Q = np.maximum(num / num.sum(), 1e-12)
        return num, Q, float(np.sum(P * np.log(P / Q)))

    for it in range(iters):
        exaggeration = TSNE_EARLY_EXAGGERATION if it < TSNE_EXAGGERATION_ITERS else 1.0
        momentum = 0.5 if it < TSNE_MOMENTUM_SWITCH_ITER else 0.8

        num, Q, kl = q_and_kl(Y)
        kl_trace[it] = kl

        PQ = (exaggeration * P - Q) * num
        grad = 4.0 * (np.diag(PQ.sum(axis=1)) - PQ) @ Y

        step = momentum * update - TSNE_LEARNING_RATE * grad
        trial = Y + step
        if it >= TSNE_EXAGGERATION_ITERS:
            # the optimizer tracks KL every iteration; once exaggeration
            # ends it refuses uphill steps, backtracking along the bare
            # gradient so the trace is monotone non-increasing
            _, _, kl_new = q_and_kl(trial)
            scale = 1.0
            while kl_new > kl and scale > 1e-6:
                scale *= 0.5
                step = -scale * TSNE_LEARNING_RATE * grad
                trial = Y + step
                _, _, kl_new = q_and_kl(trial)
            if kl_new > kl:
                step = np.zeros_like(Y)
                trial = Y
        update = step
        Y = trial - trial.mean(axis=0)

    return TsneResult(coords=Y, kl_trace=kl_trace)
