"""Applying trained detectors to long recordings: probability smoothing,
segment extraction, conservative noise harvesting, augmentation of clean
whisper with harvested triggers, and CWAD fine-tuning."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .audio import AudioBuffer, load_wav, write_wav
from .datasets import (
    CorpusManifest,
    LabelInterval,
    LabelTrack,
    ManifestEntry,
    mix_at_snr,
)
from .errors import DatasetError
from .features import rasta_plp_features
from .models import Model, forward_probs, train_lstm
from .models.forward import forward_windows
from .pipeline import HOP_S, frame_dataset, stack_sequences

MIN_SEGMENT_S = 0.200
MERGE_GAP_S = 0.100
HYSTERESIS_EXIT_SCALE = 0.8
HARVEST_MARGIN_S = 0.5
HARVEST_MIN_S = 1.0


@dataclass
class Segment:
    start_s: float
    end_s: float
    kind: str
    mean_prob: float

    @property
    def duration_s(self) -> float:
        return self.end_s - self.start_s


@dataclass
class SegmentSet:
    segments: list = field(default_factory=list)

    def __post_init__(self):
        self.segments = sorted(self.segments, key=lambda s: (s.kind, s.start_s))
        last_end: dict = {}
        for s in self.segments:
            if s.end_s <= s.start_s:
                raise ValueError(f"segment [{s.start_s}, {s.end_s}) is empty")
            if s.start_s < last_end.get(s.kind, -np.inf):
                raise ValueError(f"overlapping {s.kind} segments")
            last_end[s.kind] = s.end_s

    def of_kind(self, kind: str) -> list:
        return [s for s in self.segments if s.kind == kind]

    def total_duration_s(self, kind: str | None = None) -> float:
        return sum(s.duration_s for s in self.segments
                   if kind is None or s.kind == kind)

    def write_csv(self, path) -> None:
        import csv

        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["start_s", "end_s", "kind", "mean_prob"])
            for s in sorted(self.segments, key=lambda s: s.start_s):
                writer.writerow([f"{s.start_s:.6f}", f"{s.end_s:.6f}", s.kind,
                                 f"{s.mean_prob:.6f}"])


def smooth_probs(probs: np.ndarray, window: int = 5) -> np.ndarray:
    """Median filter with edge replication."""
    p = np.asarray(probs, dtype=np.float64)
    if len(p) == 0 or window <= 1:
        return p.copy()
    half = window // 2
    padded = np.concatenate([np.repeat(p[:1], half), p, np.repeat(p[-1:], half)])
    return np.median(np.lib.stride_tricks.sliding_window_view(padded, window), axis=1)


def _runs(mask: np.ndarray):
    """(start, end) index pairs of True runs, end exclusive."""
    if len(mask) == 0:
        return []
    diff = np.diff(mask.astype(np.int8))
    starts = list(np.flatnonzero(diff == 1) + 1)
    ends = list(np.flatnonzero(diff == -1) + 1)
    if mask[0]:
        starts.insert(0, 0)
    if mask[-1]:
        ends.append(len(mask))
    return list(zip(starts, ends))


def _hysteresis_mask(probs: np.ndarray, threshold: float, exit_scale: float) -> np.ndarray:
    """Enter speech at prob >= threshold, leave when prob < exit_scale *
    threshold."""
    exit_thr = exit_scale * threshold
    mask = np.zeros(len(probs), dtype=bool)
    active = False
    for i, p in enumerate(probs):
        if active:
            active = p >= exit_thr
        else:
            active = p >= threshold
        mask[i] = active
    return mask


def probs_to_segments(probs: np.ndarray, threshold: float, frame_hop_s: float = HOP_S,
                      kind: str = "whisper", complement_kind: str = "noise",
                      min_segment_s: float = MIN_SEGMENT_S,
                      merge_gap_s: float = MERGE_GAP_S) -> SegmentSet:
    """Hysteresis segmentation of a probability track.

    Frame i owns the span [i*hop, (i+1)*hop). Segments shorter than
    min_segment_s are discarded, then segments separated by gaps shorter
    than merge_gap_s are merged; the complement becomes noise segments.
    """
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must lie in (0, 1)")
    p = np.asarray(probs, dtype=np.float64)
    n = len(p)
    if n == 0:
        return SegmentSet()

    runs = _runs(_hysteresis_mask(p, threshold, HYSTERESIS_EXIT_SCALE))
    min_frames = int(np.ceil(min_segment_s / frame_hop_s))
    runs = [(a, b) for a, b in runs if b - a >= min_frames]

    merged = []
    gap_frames = merge_gap_s / frame_hop_s
    for a, b in runs:
        if merged and a - merged[-1][1] < gap_frames:
            merged[-1] = (merged[-1][0], b)
        else:
            merged.append((a, b))

    segments = [Segment(a * frame_hop_s, b * frame_hop_s, kind, float(p[a:b].mean()))
                for a, b in merged]
    prev = 0
    for a, b in merged + [(n, n)]:
        if a > prev:
            segments.append(Segment(prev * frame_hop_s, a * frame_hop_s,
                                    complement_kind, float(p[prev:a].mean())))
        prev = b
    return SegmentSet(segments=segments)


def _extract_segment_wavs(buf: AudioBuffer, segments, out_dir, recording_id: str):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for s in segments:
        a = int(round(s.start_s * buf.sample_rate_hz))
        b = int(round(s.end_s * buf.sample_rate_hz))
        name = f"{recording_id}_{int(round(s.start_s * 1000))}_{int(round(s.end_s * 1000))}.wav"
        write_wav(AudioBuffer(buf.samples[a:b], buf.sample_rate_hz), out_dir / name)
        paths.append(str(out_dir / name))
    return paths


def noise_regions_from_probs(raw: np.ndarray, threshold: float,
                             margin_s: float = HARVEST_MARGIN_S,
                             min_len_s: float = HARVEST_MIN_S,
                             frame_hop_s: float = HOP_S) -> SegmentSet:
    """Confidently speech-free stretches of a probability track.

    Conservative by construction: any frame whose raw or median-smoothed
    probability reaches the hysteresis exit level (0.8 x threshold) is
    speech-suspect; surviving stretches are eroded by margin_s where they
    border a suspect region (file edges are not eroded) and must still be
    at least min_len_s long.
    """
    raw = np.asarray(raw, dtype=np.float64)
    smoothed = smooth_probs(raw)
    exit_thr = HYSTERESIS_EXIT_SCALE * threshold
    suspect = (raw >= exit_thr) | (smoothed >= exit_thr)

    margin_frames = int(np.ceil(margin_s / frame_hop_s))
    min_frames = int(np.ceil(min_len_s / frame_hop_s))
    n = len(raw)
    segments = []
    for a, b in _runs(~suspect):
        if a > 0:
            a += margin_frames
        if b < n:
            b -= margin_frames
        if b - a >= min_frames:
            segments.append(Segment(a * frame_hop_s, b * frame_hop_s, "noise",
                                    float(raw[a:b].mean())))
    return SegmentSet(segments=segments)


def harvest_noise(recording: AudioBuffer, model: Model, out_dir=None,
                  recording_id: str = "rec", margin_s: float = HARVEST_MARGIN_S,
                  min_len_s: float = HARVEST_MIN_S, verify: bool = True):
    """Score a recording and extract its speech-free stretches as WAVs.

    Candidates come from the eroded noise regions of the probability
    track; each is then re-scored standalone (exactly as a consumer of
    the WAV would see it, including the feature pipeline's cold-start
    transient) and kept only if no frame reaches the model's threshold.
    Harvesting wants precision, not recall: a dropped candidate costs a
    little augmentation material, a false one poisons the noise pool.
    Returns (SegmentSet, written paths).
    """
    raw = forward_probs(model, rasta_plp_features(recording))
    candidates = noise_regions_from_probs(raw, model.threshold, margin_s, min_len_s)
    kept = []
    for seg in candidates.segments:
        if verify:
            a = int(round(seg.start_s * recording.sample_rate_hz))
            b = int(round(seg.end_s * recording.sample_rate_hz))
            # score the same 16-bit samples a consumer of the WAV will read
            q = np.clip(np.rint(np.clip(recording.samples[a:b], -1, 1) * 32768),
                        -32768, 32767) / 32768.0
            piece = AudioBuffer(q, recording.sample_rate_hz)
            rescored = forward_probs(model, rasta_plp_features(piece))
            if float(rescored.max()) >= model.threshold:
                continue
        kept.append(seg)
    seg_set = SegmentSet(segments=kept)
    paths = []
    if out_dir is not None:
        paths = _extract_segment_wavs(recording, kept, out_dir, recording_id)
    return seg_set, paths


def extract_clean_whisper(recording: AudioBuffer, cwad_model: Model, out_dir=None,
                          recording_id: str = "rec"):
    """Smooth -> threshold -> segments of kind clean_whisper; returns
    (SegmentSet, paths, summary) where the summary reports extracted
    seconds (exactly the sum of segment lengths)."""
    raw = forward_probs(cwad_model, rasta_plp_features(recording))
    smoothed = smooth_probs(raw)
    seg_set = probs_to_segments(smoothed, cwad_model.threshold,
                                kind="clean_whisper", complement_kind="noise")
    clean = seg_set.of_kind("clean_whisper")
    paths = []
    if out_dir is not None:
        paths = _extract_segment_wavs(recording, clean, out_dir, recording_id)
    summary = {"recording_id": recording_id,
               "extracted_s": sum(s.duration_s for s in clean),
               "n_segments": len(clean)}
    return SegmentSet(segments=clean), paths, summary


def build_augmented_corpus(clean_paths, noise_paths, out_dir, snrs=(10.0, 5.0, 0.0),
                           seed: int = 0, split_fractions=(0.6, 0.2, 0.2),
                           manifest_name: str = "manifest.jsonl") -> CorpusManifest:
    """Mix clean whisper segments with harvested trigger noises.

    Every (clean segment, noise file, SNR) triple becomes a noisy_whisper
    entry; every clean segment is also kept unmixed as a clean_whisper
    entry. Entries are assigned train/val/test per clean segment
    (seeded), so the same source audio never spans splits.
    """
    if not clean_paths:
        raise DatasetError("no clean whisper segments provided")
    out_dir = Path(out_dir)
    (out_dir / "audio").mkdir(parents=True, exist_ok=True)
    (out_dir / "labels").mkdir(parents=True, exist_ok=True)
    if not noise_paths:
        import warnings

        warnings.warn("no harvested noises: emitting clean copies only")

    rng = np.random.default_rng(seed)
    splits = []
    names, fractions = ("train", "val", "test"), np.asarray(split_fractions)
    fractions = fractions / fractions.sum()
    for clean in sorted(str(p) for p in clean_paths):
        splits.append((clean, names[int(rng.choice(3, p=fractions))]))

    noise_cache = {str(p): load_wav(p) for p in sorted(str(p) for p in noise_paths)}
    entries = []

    def emit(entry_id, buf, label, split, **audit):
        wav_rel = f"audio/{entry_id}.wav"
        lab_rel = f"labels/{entry_id}.csv"
        write_wav(buf, out_dir / wav_rel)
        LabelTrack(intervals=[LabelInterval(0.0, buf.duration_s, label)]).write_csv(
            out_dir / lab_rel)
        entries.append(ManifestEntry(
            id=entry_id, mixture_path=wav_rel, speaker=audit.pop("speaker", "unknown"),
            sex="u", snr_db=audit.pop("snr_db", float("inf")),
            noise_type=audit.pop("noise_type", "none"), split=split,
            label_path=lab_rel, **audit))

    for clean_path, split in splits:
        clean_buf = load_wav(clean_path)
        stem = Path(clean_path).stem
        emit(f"{stem}__clean", clean_buf, "clean_whisper", split,
             speaker=stem, clean_path=clean_path, snr_db=float("inf"))
        for noise_path, noise_buf in noise_cache.items():
            if len(noise_buf.samples) < len(clean_buf.samples):
                continue
            ntype = Path(noise_path).stem
            for snr in snrs:
                mix_seed = int(rng.integers(0, 2 ** 62))
                result = mix_at_snr(clean_buf, noise_buf, snr, seed=mix_seed)
                emit(f"{stem}__{ntype}__snr{snr:g}", result.mixture, "noisy_whisper",
                     split, speaker=stem, clean_path=clean_path,
                     noise_path=noise_path, snr_db=float(snr), noise_type=ntype,
                     noise_offset=result.noise_offset, gain=result.gain,
                     peak_scale=result.peak_scale,
                     power_span=len(clean_buf.samples))

    manifest = CorpusManifest(entries=entries)
    manifest.save(out_dir / manifest_name)
    return CorpusManifest.load(out_dir / manifest_name)


def select_threshold_cautious(probs, labels) -> float:
    """Youden's J maximization subject to the caution constraint
    FP fraction <= FN fraction (always satisfiable by raising the
    threshold until no positives are predicted)."""
    from .eval import roc_and_threshold

    curve, fallback = roc_and_threshold(probs, labels)
    y = np.asarray(labels).astype(bool)
    n = len(y)
    n_pos, n_neg = int(y.sum()), int((~y).sum())
    best = None
    for fpr, tpr, thr in zip(curve.fpr, curve.tpr, curve.thresholds):
        fp_frac = fpr * n_neg / n
        fn_frac = (1.0 - tpr) * n_pos / n
        if fp_frac <= fn_frac:
            j = tpr - fpr
            if best is None or j > best[0] + 1e-15:
                best = (j, thr)
    if best is None:
        return fallback
    thr = min(max(float(best[1]), 1e-9), 1.0 - 1e-9)
    return thr


def fine_tune_cwad(base_model: Model, manifest, features_dir=None,
                   learning_rate: float = 1e-4, max_epochs: int = 10,
                   seq_stride: int = 3, spec_overrides: dict | None = None) -> Model:
    """Continue training the best WAD model on the augmented corpus so it
    separates clean whisper (positive) from whisper corrupted by triggers
    or other noise (negative). Re-selects the threshold on the augmented
    validation split with a conservative bias (FP fraction <= FN
    fraction). Zero epochs returns the base weights with the task re-tagged.
    """
    if base_model.spec.kind != "lstm":
        raise ValueError("CWAD fine-tuning expects the LSTM WAD model")
    positive = ("clean_whisper",)
    spec = base_model.spec.with_overrides(
        class_weighting=True, max_epochs=max_epochs, **(spec_overrides or {}))

    if max_epochs == 0:
        return replace(base_model, task="cwad")

    train_utts = frame_dataset(manifest, positive, ("train",), features_dir)
    val_utts = frame_dataset(manifest, positive, ("val",), features_dir)
    Xt, yt = stack_sequences(train_utts, spec.seq_len, seq_stride)
    Xv, yv = stack_sequences(val_utts, spec.seq_len, seq_stride)

    # continue from the base weights in the base normalization frame
    model = train_lstm(Xt, yt, Xv, yv, spec, init=base_model.params(),
                       lr=learning_rate, task="cwad",
                       norm_stats=(base_model.norm_mean, base_model.norm_std))
    if len(yv):
        probs_v = forward_windows(model, Xv)
        model = replace(model, threshold=select_threshold_cautious(probs_v, yv))
    return model
