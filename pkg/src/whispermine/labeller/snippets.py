"""Snippetizing recordings for bulk labelling: fixed-length tiles with
pooled-MFCC embeddings."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..audio import AudioBuffer
from ..features import mfcc_features, rasta_plp_features, snippet_embed

MIN_SNIPPET_MS = 100
MAX_SNIPPET_MS = 1000


@dataclass
class Snippet:
    id: str
    recording_id: str
    t_start_s: float
    t_end_s: float
    embedding: np.ndarray
    coords_2d: dict = field(default_factory=dict)  # projection method -> (x, y)
    label: str | None = None


def snippetize(recording: AudioBuffer, recording_id: str, snippet_ms: int = 500,
               embedding: str = "mfcc") -> list:
    """Non-overlapping consecutive tiles; a tail shorter than snippet_ms is
    dropped. Embeddings pool per-snippet MFCC frames (mean + std); RASTA-PLP
    pooling is available behind the embedding switch."""
    if not MIN_SNIPPET_MS <= snippet_ms <= MAX_SNIPPET_MS:
        raise ValueError(f"snippet_ms must lie in [{MIN_SNIPPET_MS}, {MAX_SNIPPET_MS}]")
    feat_fn = {"mfcc": mfcc_features, "rasta_plp": rasta_plp_features}[embedding]

    n_per = int(round(snippet_ms * 1e-3 * recording.sample_rate_hz))
    n_snips = len(recording.samples) // n_per
    out = []
    for i in range(n_snips):
        sl = recording.samples[i * n_per:(i + 1) * n_per]
        feats = feat_fn(AudioBuffer(sl, recording.sample_rate_hz))
        out.append(Snippet(
            id=f"{recording_id}:{i}",
            recording_id=recording_id,
            t_start_s=i * n_per / recording.sample_rate_hz,
            t_end_s=(i + 1) * n_per / recording.sample_rate_hz,
            embedding=snippet_embed(feats),
        ))
    return out
