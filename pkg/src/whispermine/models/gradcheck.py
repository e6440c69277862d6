"""Central finite-difference verification of the analytic gradients."""

from __future__ import annotations

import numpy as np

from .nets import backward_for_spec, bce_loss, forward_for_spec, init_params
from .spec import ModelSpec, flatten_params, unflatten_params, weight_layout


def gradient_check(spec: ModelSpec, X, y, n_params: int = 200,
                   eps: float = 1e-5, seed: int = 0) -> float:
    """Compare analytic BCE gradients against central finite differences
    over n_params randomly chosen coordinates (double precision).
    Returns the maximum relative error."""
    rng = np.random.Generator(np.random.PCG64(seed))
    params = init_params(spec, rng)
    layout = weight_layout(spec)
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)

    probs, cache = forward_for_spec(spec, params, X)
    grads = backward_for_spec(spec, params, cache, y)
    flat_grad = flatten_params(layout, grads)
    flat = flatten_params(layout, params)

    idx = rng.choice(flat.size, size=min(n_params, flat.size), replace=False)
    worst = 0.0
    for i in idx:
        losses = []
        for delta in (eps, -eps):
            bumped = flat.copy()
            bumped[i] += delta
            p, _ = forward_for_spec(spec, unflatten_params(layout, bumped), X)
            losses.append(bce_loss(p, y))
        numeric = (losses[0] - losses[1]) / (2.0 * eps)
        analytic = flat_grad[i]
        # floor the denominator: below ~1e-6 the central difference itself
        # is dominated by cancellation noise (machine eps * |loss| / eps),
        # so near-zero gradients are compared absolutely
        rel = abs(analytic - numeric) / max(abs(analytic), abs(numeric), 1e-6)
        worst = max(worst, rel)
    return worst
