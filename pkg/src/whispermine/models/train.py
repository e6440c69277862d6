"""Deterministic training loops for the three classifier kinds.

All three return a :class:`Model` whose decision threshold was selected on
the validation split (Youden's J on the ROC curve). Training happens in
float64; the shipped model carries float32 weights so that save/load
round-trips are bit-exact.
"""

from __future__ import annotations

import numpy as np

from ..errors import DatasetError, NumericalError
from ..eval import roc_and_threshold
from .nets import backward_for_spec, bce_loss, forward_for_spec, init_params
from .spec import Model, ModelSpec, flatten_params, weight_layout
from .svm import pegasos_train


def _check_two_classes(y):
    y = np.asarray(y)
    if len(y) == 0 or y.min() == y.max():
        raise DatasetError("training requires at least one example of each class")


def _norm_stats(X):
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std = np.where(std < 1e-8, 1.0, std)
    return mean, std


def _f1(y_true, y_pred):
    tp = np.sum((y_true == 1) & (y_pred == 1))
    fp = np.sum((y_true == 0) & (y_pred == 1))
    fn = np.sum((y_true == 1) & (y_pred == 0))
    denom = 2 * tp + fp + fn
    return 2 * tp / denom if denom > 0 else 0.0


def _class_weights(spec, y):
    if not spec.class_weighting:
        return None
    n = len(y)
    n_pos = max(int(np.sum(y)), 1)
    n_neg = max(n - int(np.sum(y)), 1)
    return np.where(np.asarray(y) > 0, n / (2.0 * n_pos), n / (2.0 * n_neg))


def _select_threshold(probs_val, y_val) -> float:
    y = np.asarray(y_val)
    if len(y) == 0 or y.min() == y.max():
        return 0.5
    _, thr = roc_and_threshold(probs_val, y)
    return thr


class Adam:
    def __init__(self, params, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.b1, self.b2, self.eps = lr, beta1, beta2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params, grads):
        self.t += 1
        corr1 = 1.0 - self.b1 ** self.t
        corr2 = 1.0 - self.b2 ** self.t
        for k, g in grads.items():
            self.m[k] = self.b1 * self.m[k] + (1.0 - self.b1) * g
            self.v[k] = self.b2 * self.v[k] + (1.0 - self.b2) * g * g
            params[k] -= self.lr * (self.m[k] / corr1) / (np.sqrt(self.v[k] / corr2) + self.eps)


def _finalize(spec, params, mean, std, probs_val, y_val, task="wad") -> Model:
    thr = _select_threshold(probs_val, y_val)
    return Model(spec=spec, weights=flatten_params(weight_layout(spec), params),
                 norm_mean=mean, norm_std=std, threshold=thr, task=task)


def _gradient_train(spec: ModelSpec, X_train, y_train, X_val, y_val,
                    init: dict | None = None, lr: float | None = None,
                    task: str = "wad", norm_stats=None) -> Model:
    """Shared Adam loop for the MLP (frame input) and LSTM (sequence input)."""
    _check_two_classes(y_train)
    if norm_stats is not None:
        # fine-tuning keeps the frame the base weights were learned in
        mean, std = norm_stats
    else:
        # per-dimension statistics; sequences share one statistic across time
        mean, std = _norm_stats(X_train.reshape(-1, X_train.shape[-1]))

    Xt = (X_train - mean) / std
    Xv = (X_val - mean) / std if len(X_val) else X_val
    yt = np.asarray(y_train, dtype=np.float64)
    yv = np.asarray(y_val, dtype=np.float64)
    weights_all = _class_weights(spec, yt)

    rng = np.random.Generator(np.random.PCG64(spec.seed))
    params = init if init is not None else init_params(spec, rng)
    opt = Adam(params, lr if lr is not None else spec.learning_rate)

    best = {"f1": -1.0, "params": {k: v.copy() for k, v in params.items()}, "bad": 0}
    n = len(Xt)
    for _epoch in range(spec.max_epochs):
        order = rng.permutation(n)
        for start in range(0, n, spec.batch_size):
            idx = order[start:start + spec.batch_size]
            probs, cache = forward_for_spec(spec, params, Xt[idx])
            loss = bce_loss(probs, yt[idx],
                            None if weights_all is None else weights_all[idx])
            if not np.isfinite(loss):
                raise NumericalError("training diverged: non-finite loss")
            grads = backward_for_spec(spec, params, cache, yt[idx],
                                      None if weights_all is None else weights_all[idx])
            opt.step(params, grads)

        if len(yv):
            probs_v = _forward_in_chunks(spec, params, Xv)
            f1 = _f1(yv, (probs_v >= 0.5).astype(int))
            if f1 > best["f1"]:
                best = {"f1": f1, "params": {k: v.copy() for k, v in params.items()}, "bad": 0}
            else:
                best["bad"] += 1
                if best["bad"] >= spec.patience:
                    break

    params = best["params"] if len(yv) and best["f1"] >= 0 else params
    probs_val = _forward_in_chunks(spec, params, Xv) if len(yv) else np.zeros(0)
    return _finalize(spec, params, mean, std, probs_val, yv, task=task)


def _forward_in_chunks(spec, params, X, chunk=4096):
    if len(X) == 0:
        return np.zeros(0)
    outs = []
    for start in range(0, len(X), chunk):
        probs, _ = forward_for_spec(spec, params, X[start:start + chunk])
        outs.append(probs)
    return np.concatenate(outs)


def train_mlp(X_train, y_train, X_val, y_val, spec: ModelSpec) -> Model:
    """Per-frame MLP: BCE on a sigmoid output, Adam, early stopping on
    validation F1."""
    if spec.kind != "mlp":
        raise ValueError("spec.kind must be 'mlp'")
    return _gradient_train(spec, np.asarray(X_train, dtype=np.float64), y_train,
                           np.asarray(X_val, dtype=np.float64), y_val)


def train_lstm(X_train, y_train, X_val, y_val, spec: ModelSpec,
               init: dict | None = None, lr: float | None = None,
               task: str = "wad", norm_stats=None) -> Model:
    """Sequence LSTM: windows of exactly spec.seq_len frames, BCE on the
    final-frame label, full BPTT."""
    if spec.kind != "lstm":
        raise ValueError("spec.kind must be 'lstm'")
    Xt = np.asarray(X_train, dtype=np.float64)
    Xv = np.asarray(X_val, dtype=np.float64)
    if Xt.ndim != 3 or Xt.shape[1] != spec.seq_len:
        raise DatasetError(f"training sequences must be (n, {spec.seq_len}, d)")
    if len(Xv) and (Xv.ndim != 3 or Xv.shape[1] != spec.seq_len):
        raise DatasetError(f"validation sequences must be (n, {spec.seq_len}, d)")
    return _gradient_train(spec, Xt, y_train, Xv, y_val, init=init, lr=lr,
                           task=task, norm_stats=norm_stats)


def train_svm(X_train, y_train, X_val, y_val, spec: ModelSpec) -> Model:
    """Linear SVM via Pegasos; scores are the logistic squashing of the
    margin so ROC machinery applies unchanged."""
    if spec.kind != "svm":
        raise ValueError("spec.kind must be 'svm'")
    _check_two_classes(y_train)
    X = np.asarray(X_train, dtype=np.float64)
    mean, std = _norm_stats(X)
    Xn = (X - mean) / std
    weights_all = _class_weights(spec, np.asarray(y_train))
    w, b = pegasos_train(Xn, np.asarray(y_train), spec.svm_lambda,
                         spec.svm_epochs, spec.seed, weights_all)
    params = {"w": w, "b": b}
    if len(np.asarray(y_val)):
        Xvn = (np.asarray(X_val, dtype=np.float64) - mean) / std
        probs_val, _ = forward_for_spec(spec, params, Xvn)
    else:
        probs_val = np.zeros(0)
    return _finalize(spec, params, mean, std, probs_val, np.asarray(y_val))
