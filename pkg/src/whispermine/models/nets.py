"""MLP and LSTM forward/backward passes in plain numpy (float64).

Training and gradient checking run against these; inference casts the
stored float32 weights up to float64 and reuses the same forward code.
"""

from __future__ import annotations

import numpy as np

from .spec import ModelSpec, weight_layout


def sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def bce_loss(probs, y, sample_weight=None):
    p = np.clip(probs, 1e-12, 1.0 - 1e-12)
    terms = -(y * np.log(p) + (1.0 - y) * np.log(1.0 - p))
    if sample_weight is not None:
        terms = terms * sample_weight
    return float(np.mean(terms))


def init_params(spec: ModelSpec, rng: np.random.Generator) -> dict:
    """Xavier-uniform feedforward weights; scaled-uniform U(+-1/sqrt(h))
    LSTM matrices with zero biases except the forget gate at +1."""
    params = {}
    if spec.kind == "svm":
        params["w"] = np.zeros(spec.input_dim)
        params["b"] = np.zeros(1)
        return params
    if spec.kind == "mlp":
        dims = [spec.input_dim, *spec.mlp_layers, 1]
        for i in range(len(dims) - 1):
            bound = np.sqrt(6.0 / (dims[i] + dims[i + 1]))
            params[f"W{i + 1}"] = rng.uniform(-bound, bound, size=(dims[i], dims[i + 1]))
            params[f"b{i + 1}"] = np.zeros(dims[i + 1])
        return params
    h = spec.lstm_hidden
    scale = 1.0 / np.sqrt(h)
    in_dim = spec.input_dim
    for layer in range(1, spec.lstm_layers + 1):
        params[f"Wx{layer}"] = rng.uniform(-scale, scale, size=(in_dim, 4 * h))
        params[f"Wh{layer}"] = rng.uniform(-scale, scale, size=(h, 4 * h))
        b = np.zeros(4 * h)
        b[h:2 * h] = 1.0  # forget-gate bias
        params[f"b{layer}"] = b
        in_dim = h
    bound = np.sqrt(6.0 / (h + 1))
    params["Wo"] = rng.uniform(-bound, bound, size=(h, 1))
    params["bo"] = np.zeros(1)
    return params


# ---------------------------------------------------------------- MLP


def mlp_forward(params: dict, X: np.ndarray, n_hidden: int):
    """X: (B, d) -> probabilities (B,). Returns (probs, cache)."""
    acts = [np.asarray(X, dtype=np.float64)]
    a = acts[0]
    for i in range(1, n_hidden + 1):
        z = a @ params[f"W{i}"] + params[f"b{i}"]
        a = np.maximum(z, 0.0)  # ReLU; subgradient at 0 is 0
        acts.append(a)
    z_out = a @ params[f"W{n_hidden + 1}"] + params[f"b{n_hidden + 1}"]
    probs = sigmoid(z_out[:, 0])
    return probs, (acts, probs)


def mlp_backward(params: dict, cache, y: np.ndarray, n_hidden: int,
                 sample_weight=None) -> dict:
    """Gradients of mean (optionally weighted) BCE wrt every parameter."""
    acts, probs = cache
    B = len(y)
    delta = (probs - y) / B
    if sample_weight is not None:
        delta = delta * sample_weight
    delta = delta[:, None]
    grads = {}
    for i in range(n_hidden + 1, 0, -1):
        a_prev = acts[i - 1]
        grads[f"W{i}"] = a_prev.T @ delta
        grads[f"b{i}"] = delta.sum(axis=0)
        if i > 1:
            delta = (delta @ params[f"W{i}"].T) * (acts[i - 1] > 0)
    return grads


# ---------------------------------------------------------------- LSTM


def _lstm_layer_forward(Wx, Wh, b, X):
    """One unidirectional layer over X: (B, T, d) -> hidden states (B, T, h)."""
    B, T, _ = X.shape
    h_dim = Wh.shape[0]
    zx = X.reshape(B * T, -1) @ Wx
    zx = zx.reshape(B, T, 4 * h_dim)
    h = np.zeros((B, h_dim))
    c = np.zeros((B, h_dim))
    gates = np.empty((B, T, 4 * h_dim))
    cells = np.empty((B, T, h_dim))
    tanh_c = np.empty((B, T, h_dim))
    hs = np.empty((B, T, h_dim))
    for t in range(T):
        z = zx[:, t] + h @ Wh + b
        i = sigmoid(z[:, :h_dim])
        f = sigmoid(z[:, h_dim:2 * h_dim])
        g = np.tanh(z[:, 2 * h_dim:3 * h_dim])
        o = sigmoid(z[:, 3 * h_dim:])
        c = f * c + i * g
        tc = np.tanh(c)
        h = o * tc
        gates[:, t] = np.concatenate([i, f, g, o], axis=1)
        cells[:, t] = c
        tanh_c[:, t] = tc
        hs[:, t] = h
    return hs, (X, gates, cells, tanh_c, hs)


def _lstm_layer_backward(Wx, Wh, cache, dh_out):
    """Backprop one layer. dh_out: (B, T, h) gradients wrt the hidden
    outputs. Returns (dX, dWx, dWh, db)."""
    X, gates, cells, tanh_c, hs = cache
    B, T, _ = X.shape
    h_dim = Wh.shape[0]

    dWx = np.zeros_like(Wx)
    dWh = np.zeros_like(Wh)
    db = np.zeros(4 * h_dim)
    dX = np.empty_like(X)
    dh_next = np.zeros((B, h_dim))
    dc_next = np.zeros((B, h_dim))
    dz_all = np.empty((B, T, 4 * h_dim))

    for t in range(T - 1, -1, -1):
        i = gates[:, t, :h_dim]
        f = gates[:, t, h_dim:2 * h_dim]
        g = gates[:, t, 2 * h_dim:3 * h_dim]
        o = gates[:, t, 3 * h_dim:]
        tc = tanh_c[:, t]
        c_prev = cells[:, t - 1] if t > 0 else np.zeros((B, h_dim))

        dh = dh_out[:, t] + dh_next
        do = dh * tc
        dc = dh * o * (1.0 - tc * tc) + dc_next
        di = dc * g
        df = dc * c_prev
        dg = dc * i
        dc_next = dc * f

        dz = np.concatenate([
            di * i * (1.0 - i),
            df * f * (1.0 - f),
            dg * (1.0 - g * g),
            do * o * (1.0 - o),
        ], axis=1)
        dz_all[:, t] = dz
        h_prev = hs[:, t - 1] if t > 0 else np.zeros((B, h_dim))
        dWh += h_prev.T @ dz
        dh_next = dz @ Wh.T

    flat_dz = dz_all.reshape(B * T, 4 * h_dim)
    dWx = X.reshape(B * T, -1).T @ flat_dz
    db = flat_dz.sum(axis=0)
    dX = flat_dz @ Wx.T
    return dX.reshape(B, T, -1), dWx, dWh, db


def lstm_forward(params: dict, X: np.ndarray, n_layers: int):
    """X: (B, T, d) -> probability of the final frame, shape (B,)."""
    caches = []
    h = np.asarray(X, dtype=np.float64)
    for layer in range(1, n_layers + 1):
        h, cache = _lstm_layer_forward(params[f"Wx{layer}"], params[f"Wh{layer}"],
                                       params[f"b{layer}"], h)
        caches.append(cache)
    h_last = h[:, -1]
    z = h_last @ params["Wo"] + params["bo"]
    probs = sigmoid(z[:, 0])
    return probs, (caches, h_last, probs, X.shape)


def lstm_backward(params: dict, cache, y: np.ndarray, n_layers: int,
                  sample_weight=None) -> dict:
    caches, h_last, probs, (B, T, _) = cache
    delta = (probs - y) / B
    if sample_weight is not None:
        delta = delta * sample_weight
    delta = delta[:, None]

    grads = {"Wo": h_last.T @ delta, "bo": delta.sum(axis=0)}
    dh_out = np.zeros((B, T, params["Wo"].shape[0]))
    dh_out[:, -1] = delta @ params["Wo"].T
    for layer in range(n_layers, 0, -1):
        dX, dWx, dWh, db = _lstm_layer_backward(
            params[f"Wx{layer}"], params[f"Wh{layer}"], caches[layer - 1], dh_out)
        grads[f"Wx{layer}"] = dWx
        grads[f"Wh{layer}"] = dWh
        grads[f"b{layer}"] = db
        dh_out = dX
    return grads


def forward_for_spec(spec: ModelSpec, params: dict, X: np.ndarray):
    """Dispatch on spec.kind; returns (probs, cache)."""
    if spec.kind == "svm":
        margin = np.asarray(X, dtype=np.float64) @ params["w"] + params["b"][0]
        return sigmoid(margin), None
    if spec.kind == "mlp":
        return mlp_forward(params, X, len(spec.mlp_layers))
    return lstm_forward(params, X, spec.lstm_layers)


def backward_for_spec(spec: ModelSpec, params: dict, cache, y, sample_weight=None):
    if spec.kind == "mlp":
        return mlp_backward(params, cache, y, len(spec.mlp_layers), sample_weight)
    if spec.kind == "lstm":
        return lstm_backward(params, cache, y, spec.lstm_layers, sample_weight)
    raise ValueError(f"no analytic gradients for kind {spec.kind!r}")
