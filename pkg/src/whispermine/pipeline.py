"""Glue between materialized corpora and the classifiers: feature/label
assembly per split, sequence windowing, training and caching."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .audio import load_wav
from .datasets import CorpusManifest, LabelTrack, label_frames
from .errors import MissingInputError
from .features import (
    FRAME_HOP_MS,
    FRAME_WINDOW_MS,
    load_features,
    rasta_plp_features,
    save_features,
)
from .models import Model, ModelSpec, forward_probs, train_lstm, train_mlp, train_svm

WINDOW_S = FRAME_WINDOW_MS / 1000.0
HOP_S = FRAME_HOP_MS / 1000.0


def manifest_entries(manifest):
    if isinstance(manifest, CorpusManifest):
        return manifest.entries
    return CorpusManifest.load(manifest).entries


def entry_features(entry, features_dir=None):
    """RASTA-PLP features for one manifest entry, preferring a cached
    .feat file when a features directory is given."""
    if features_dir is not None:
        cached = Path(features_dir) / f"{entry.id}.feat"
        if cached.exists():
            return load_features(cached)
    path = Path(entry.mixture_path)
    if not path.exists():
        raise MissingInputError(f"mixture not found: {path}")
    return rasta_plp_features(load_wav(path))


def featurize_manifest(manifest, features_dir) -> int:
    """Extract and cache features for every entry (plus the noise-tail
    variant where the entry has one); returns the entry count."""
    features_dir = Path(features_dir)
    features_dir.mkdir(parents=True, exist_ok=True)
    entries = manifest_entries(manifest)
    for entry in entries:
        out = features_dir / f"{entry.id}.feat"
        if not out.exists():
            save_features(rasta_plp_features(load_wav(entry.mixture_path)), out)
        tail_out = features_dir / f"{entry.id}__tail.feat"
        if not tail_out.exists():
            tail = _compute_tail_features(entry)
            if tail is not None:
                save_features(tail, tail_out)
    return len(entries)


def _compute_tail_features(entry):
    """Features of the entry's noise-only tail, cut out and processed as
    a recording of its own.

    The band-trajectory filtering inside the feature pipeline is stateful:
    a recording's first second carries a warm-up transient. Corpus files
    always open with speech, so without these tails every cold start a
    model ever sees is labelled whisper, and anything that begins with
    noise (e.g. a harvested segment scored on its own) is off
    distribution.
    """
    try:
        track = LabelTrack.read_csv(entry.label_path)
    except Exception:
        return None
    tail_start = None
    for iv in track.intervals:
        if iv.label == "nonspeech":
            tail_start = iv.start_s
            break
    if tail_start is None:
        return None
    buf = load_wav(entry.mixture_path)
    a = int(tail_start * buf.sample_rate_hz)
    sliced = buf.samples[a:]
    if len(sliced) < int(WINDOW_S * buf.sample_rate_hz):
        return None
    from .audio import AudioBuffer

    return rasta_plp_features(AudioBuffer(sliced, buf.sample_rate_hz))


def entry_tail_features(entry, features_dir=None):
    if features_dir is not None:
        cached = Path(features_dir) / f"{entry.id}__tail.feat"
        if cached.exists():
            return load_features(cached)
    return _compute_tail_features(entry)


def entry_frame_labels(entry, positive, n_frames: int) -> np.ndarray:
    track = LabelTrack.read_csv(entry.label_path)
    return label_frames(track, n_frames, WINDOW_S, HOP_S, positive)


def entry_probs(entry, model: Model, features_dir=None) -> np.ndarray:
    return forward_probs(model, entry_features(entry, features_dir))


def frame_dataset(manifest, positive=("whisper",), splits=("train",),
                  features_dir=None, noise_tails=False, tail_max_frames=75,
                  tail_every=3):
    """Per-utterance feature matrices and frame labels for given splits.
    Returns (list of (rows, labels)), order-stable by entry id.

    With noise_tails, every tail_every-th entry also contributes the
    leading frames of its noise tail processed as a cold-started
    recording (all-negative labels); see _compute_tail_features.
    """
    out = []
    selected = [e for e in sorted(manifest_entries(manifest), key=lambda e: e.id)
                if e.split in splits]
    for i, entry in enumerate(selected):
        feats = entry_features(entry, features_dir)
        labels = entry_frame_labels(entry, positive, feats.n_frames)
        out.append((feats.rows, labels))
        if noise_tails and i % tail_every == 0:
            tail = entry_tail_features(entry, features_dir)
            if tail is not None:
                rows = tail.rows[:tail_max_frames]
                out.append((rows, np.zeros(len(rows), dtype=np.uint8)))
    return out

def stack_frames(per_utterance):
    X = np.concatenate([rows for rows, _ in per_utterance])
    y = np.concatenate([labels for _, labels in per_utterance])
    return X, y


def stack_sequences(per_utterance, seq_len: int, stride: int = 1):
    """Cut length-seq_len windows (label = final frame's label) from each
    utterance separately so windows never straddle utterance boundaries.

    Each utterance is left-padded by replicating its first frame, exactly
    as inference does, so every frame (including the first seq_len-1) can
    be a window's final frame and training matches the deployment
    distribution.
    """
    xs, ys = [], []
    for rows, labels in per_utterance:
        if len(rows) == 0:
            continue
        padded = np.concatenate([np.repeat(rows[:1], seq_len - 1, axis=0), rows])
        starts = np.arange(0, len(rows), stride)
        win = np.lib.stride_tricks.sliding_window_view(padded, (seq_len, rows.shape[1]))
        xs.append(np.ascontiguousarray(win[starts, 0]))
        ys.append(labels[starts])
    if not xs:
        return np.zeros((0, seq_len, 57)), np.zeros(0, dtype=np.uint8)
    return np.concatenate(xs), np.concatenate(ys)


def train_from_manifest(manifest, spec: ModelSpec, positive=("whisper",),
                        features_dir=None, train_splits=("train",),
                        val_splits=("val",), seq_stride: int = 3,
                        noise_tails: bool = True) -> Model:
    """Assemble datasets from a manifest and train the requested kind.
    The LSTM trains on strided windows; validation uses the same stride.
    Training data includes cold-started noise tails (all kinds see the
    same data) unless noise_tails is off."""
    train_utts = frame_dataset(manifest, positive, train_splits, features_dir,
                               noise_tails=noise_tails)
    val_utts = frame_dataset(manifest, positive, val_splits, features_dir)

    if spec.kind == "lstm":
        Xt, yt = stack_sequences(train_utts, spec.seq_len, seq_stride)
        Xv, yv = stack_sequences(val_utts, spec.seq_len, seq_stride)
        return train_lstm(Xt, yt, Xv, yv, spec)

    Xt, yt = stack_frames(train_utts)
    Xv, yv = stack_frames(val_utts) if val_utts else (np.zeros((0, Xt.shape[1])), np.zeros(0))
    if spec.kind == "mlp":
        return train_mlp(Xt, yt, Xv, yv, spec)
    return train_svm(Xt, yt, Xv, yv, spec)
