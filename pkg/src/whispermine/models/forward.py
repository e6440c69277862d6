"""Inference: per-frame speech probabilities for any model kind."""

from __future__ import annotations

import numpy as np

from ..features import FeatureMatrix
from .nets import forward_for_spec
from .spec import Model


def _as_rows(features) -> np.ndarray:
    if isinstance(features, FeatureMatrix):
        return features.rows
    return np.atleast_2d(np.asarray(features, dtype=np.float64))


def sliding_windows(rows: np.ndarray, seq_len: int) -> np.ndarray:
    """Length-seq_len windows with stride 1, one per input frame; the
    first seq_len-1 frames are covered by left-replicating frame 0."""
    if len(rows) == 0:
        return np.zeros((0, seq_len, rows.shape[1]))
    padded = np.concatenate([np.repeat(rows[:1], seq_len - 1, axis=0), rows], axis=0)
    win = np.lib.stride_tricks.sliding_window_view(padded, (seq_len, rows.shape[1]))
    return win[:, 0]


def forward_probs(model: Model, features, chunk: int = 4096) -> np.ndarray:
    """Apply stored normalization and the network.

    Output length equals the input frame count for every kind; the LSTM
    scores a stride-1 sliding window and assigns each probability to the
    window's final frame.
    """
    rows = _as_rows(features)
    if rows.shape[1] != model.spec.input_dim:
        raise ValueError(
            f"feature dim {rows.shape[1]} != model input dim {model.spec.input_dim}")
    normed = model.normalize(rows)
    params = model.params()

    if model.spec.kind in ("svm", "mlp"):
        outs = []
        for start in range(0, len(normed), chunk):
            probs, _ = forward_for_spec(model.spec, params, normed[start:start + chunk])
            outs.append(probs)
        return np.concatenate(outs) if outs else np.zeros(0)

    windows = sliding_windows(normed, model.spec.seq_len)
    outs = []
    for start in range(0, len(windows), chunk):
        probs, _ = forward_for_spec(model.spec, params,
                                    np.ascontiguousarray(windows[start:start + chunk]))
        outs.append(probs)
    return np.concatenate(outs) if outs else np.zeros(0)


def forward_windows(model: Model, windows: np.ndarray, chunk: int = 4096) -> np.ndarray:
    """Probabilities for pre-cut (n, seq_len, dim) sequence windows."""
    if model.spec.kind != "lstm":
        raise ValueError("forward_windows is for sequence models")
    normed = model.normalize(np.asarray(windows, dtype=np.float64))
    params = model.params()
    outs = []
    for start in range(0, len(normed), chunk):
        probs, _ = forward_for_spec(model.spec, params, normed[start:start + chunk])
        outs.append(probs)
    return np.concatenate(outs) if outs else np.zeros(0)
