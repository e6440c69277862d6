"""Model specification, parameter layout and the trained-model container."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace
from typing import Sequence

import numpy as np

KINDS = ("svm", "mlp", "lstm")

# LSTM gate blocks are concatenated [input | forget | candidate | output]
# along the last axis of Wx / Wh / b.
GATE_ORDER = "ifgo"


@dataclass
class ModelSpec:
    kind: str
    input_dim: int = 57
    mlp_layers: tuple = (64, 64, 8)
    lstm_hidden: int = 64
    lstm_layers: int = 2
    seq_len: int = 30
    seed: int = 0
    learning_rate: float = 1e-3
    batch_size: int = 32
    max_epochs: int = 50
    patience: int = 5
    svm_lambda: float = 1e-4
    svm_epochs: int = 5
    class_weighting: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}")
        if self.seq_len < 1:
            raise ValueError("seq_len must be >= 1")
        if self.input_dim < 1 or self.lstm_hidden < 1:
            raise ValueError("dimensions must be positive")
        self.mlp_layers = tuple(int(v) for v in self.mlp_layers)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ModelSpec":
        d = dict(d)
        d["mlp_layers"] = tuple(d.get("mlp_layers", (64, 64, 8)))
        return cls(**d)

    def with_overrides(self, **kw) -> "ModelSpec":
        return replace(self, **kw)


def weight_layout(spec: ModelSpec) -> list:
    """Ordered (name, shape) pairs defining the flat weight vector."""
    if spec.kind == "svm":
        return [("w", (spec.input_dim,)), ("b", (1,))]
    if spec.kind == "mlp":
        dims = [spec.input_dim, *spec.mlp_layers, 1]
        layout = []
        for i in range(len(dims) - 1):
            layout.append((f"W{i + 1}", (dims[i], dims[i + 1])))
            layout.append((f"b{i + 1}", (dims[i + 1],)))
        return layout
    h = spec.lstm_hidden
    layout = []
    in_dim = spec.input_dim
    for layer in range(1, spec.lstm_layers + 1):
        layout.append((f"Wx{layer}", (in_dim, 4 * h)))
        layout.append((f"Wh{layer}", (h, 4 * h)))
        layout.append((f"b{layer}", (4 * h,)))
        in_dim = h
    layout.append(("Wo", (h, 1)))
    layout.append(("bo", (1,)))
    return layout


def expected_param_count(spec: ModelSpec) -> int:
    return sum(int(np.prod(shape)) for _, shape in weight_layout(spec))


def flatten_params(layout: Sequence, params: dict) -> np.ndarray:
    return np.concatenate([np.asarray(params[name], dtype=np.float64).ravel()
                           for name, _ in layout])


def unflatten_params(layout: Sequence, flat: np.ndarray) -> dict:
    flat = np.asarray(flat, dtype=np.float64)
    out = {}
    pos = 0
    for name, shape in layout:
        size = int(np.prod(shape))
        out[name] = flat[pos:pos + size].reshape(shape).copy()
        pos += size
    if pos != flat.size:
        raise ValueError(f"flat vector has {flat.size} values, layout expects {pos}")
    return out


@dataclass
class Model:
    """A trained classifier: spec, float32 weights in layout order,
    normalization statistics and the operating threshold."""

    spec: ModelSpec
    weights: np.ndarray
    norm_mean: np.ndarray
    norm_std: np.ndarray
    threshold: float
    task: str = "wad"
    feature_kind: str = "rasta_plp_57"
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float32).ravel()
        self.norm_mean = np.asarray(self.norm_mean, dtype=np.float64).ravel()
        self.norm_std = np.asarray(self.norm_std, dtype=np.float64).ravel()
        n = expected_param_count(self.spec)
        if self.weights.size != n:
            raise ValueError(f"weight count {self.weights.size} != spec-derived {n}")
        if self.norm_mean.size != self.spec.input_dim or self.norm_std.size != self.spec.input_dim:
            raise ValueError("normalization statistics must match input_dim")
        if np.any(self.norm_std <= 0):
            raise ValueError("norm_std must be positive elementwise")
        if not 0.0 < self.threshold < 1.0:
            raise ValueError("threshold must lie in (0, 1)")

    def params(self) -> dict:
        """Float64 parameter dict reconstructed from the flat f32 vector."""
        return unflatten_params(weight_layout(self.spec), self.weights.astype(np.float64))

    def normalize(self, X: np.ndarray) -> np.ndarray:
        return (np.asarray(X, dtype=np.float64) - self.norm_mean) / self.norm_std
