"""Model file format.

Layout: magic "WADM" | version u32 | crc32 u32 | header length u32 |
UTF-8 JSON header | little-endian float32 weight blob. The checksum
covers header + blob. The JSON header records the spec, normalization
statistics, threshold and the weight layout names in order; loading
rejects any size mismatch against the spec-derived parameter count.
"""

from __future__ import annotations

import json
import struct
import zlib
from pathlib import Path

import numpy as np

from ..errors import ModelFormatError
from .spec import Model, ModelSpec, expected_param_count, weight_layout

MODEL_MAGIC = b"WADM"
MODEL_VERSION = 1


def save_model(model: Model, path) -> None:
    layout = weight_layout(model.spec)
    header = {
        "spec": model.spec.to_dict(),
        "norm_mean": model.norm_mean.tolist(),
        "norm_std": model.norm_std.tolist(),
        "threshold": model.threshold,
        "task": model.task,
        "feature_kind": model.feature_kind,
        "layout": [[name, list(shape)] for name, shape in layout],
        "extra": model.extra,
    }
    header_bytes = json.dumps(header).encode("utf-8")
    blob = model.weights.astype("<f4").tobytes()
    crc = zlib.crc32(header_bytes + blob) & 0xFFFFFFFF
    out = MODEL_MAGIC + struct.pack("<III", MODEL_VERSION, crc, len(header_bytes))
    Path(path).write_bytes(out + header_bytes + blob)


def load_model(path) -> Model:
    raw = Path(path).read_bytes()
    if len(raw) < 16:
        raise ModelFormatError(f"{path}: truncated file")
    if raw[:4] != MODEL_MAGIC:
        raise ModelFormatError(f"{path}: bad magic {raw[:4]!r}, not a model file")
    version, crc, header_len = struct.unpack("<III", raw[4:16])
    if version != MODEL_VERSION:
        raise ModelFormatError(f"{path}: unsupported version {version}")
    if len(raw) < 16 + header_len:
        raise ModelFormatError(f"{path}: truncated header")
    header_bytes = raw[16:16 + header_len]
    blob = raw[16 + header_len:]
    if zlib.crc32(header_bytes + blob) & 0xFFFFFFFF != crc:
        raise ModelFormatError(f"{path}: checksum failure")
    try:
        header = json.loads(header_bytes.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ModelFormatError(f"{path}: corrupt header: {exc}") from exc

    spec = ModelSpec.from_dict(header["spec"])
    expected = expected_param_count(spec)
    if len(blob) != expected * 4:
        raise ModelFormatError(
            f"{path}: weight blob holds {len(blob) // 4} values, spec expects {expected}")
    declared = [name for name, _ in header.get("layout", [])]
    actual = [name for name, _ in weight_layout(spec)]
    if declared != actual:
        raise ModelFormatError(f"{path}: layout names do not match the spec")

    weights = np.frombuffer(blob, dtype="<f4")
    return Model(spec=spec, weights=weights,
                 norm_mean=np.array(header["norm_mean"]),
                 norm_std=np.array(header["norm_std"]),
                 threshold=header["threshold"], task=header.get("task", "wad"),
                 feature_kind=header.get("feature_kind", "rasta_plp_57"),
                 extra=header.get("extra", {}))
