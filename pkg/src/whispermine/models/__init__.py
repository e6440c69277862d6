from .forward import forward_probs, forward_windows, sliding_windows
from .gradcheck import gradient_check
from .io import load_model, save_model
from .spec import (
    GATE_ORDER,
    Model,
    ModelSpec,
    expected_param_count,
    flatten_params,
    unflatten_params,
    weight_layout,
)
from .train import train_lstm, train_mlp, train_svm

__all__ = [
    "GATE_ORDER",
    "Model",
    "ModelSpec",
    "expected_param_count",
    "flatten_params",
    "forward_probs",
    "forward_windows",
    "gradient_check",
    "load_model",
    "save_model",
    "sliding_windows",
    "train_lstm",
    "train_mlp",
    "train_svm",
    "unflatten_params",
    "weight_layout",
]
