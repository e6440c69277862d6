"""Synthetic whisper/trigger corpus for smoke tests and benchmarks.

The "whisper" class is speech-like shaped noise: formant-style spectral
envelopes that wander over time plus syllabic amplitude modulation and the
reduced low-frequency energy typical of whispering. Trigger noises cover
the stationary and impulsive cases: a whisper-coloured but unmodulated
hiss, low-frequency hum, and tapping impulse trains. None of it is real
speech; its job is to exercise the detection pipeline end to end with
known ground truth.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .audio import AudioBuffer, write_wav
from .datasets import LabelInterval, LabelTrack, NoiseInfo, UtteranceInfo

RATE = 16000
_FRAME = 1024
_HOP = 512

NOISE_TYPES = ("hiss", "crinkle", "taps", "hum")


def _interp_track(rng, n_points, lo, hi, n_out):
    """Piecewise-smooth random trajectory in [lo, hi]."""
    knots = rng.uniform(lo, hi, size=max(n_points, 2))
    x = np.linspace(0, 1, len(knots))
    return np.interp(np.linspace(0, 1, n_out), x, knots)


def _spectral_envelope(freqs, formants, widths, tilt_hz=700.0):
    """Formant bumps on a high-passed (whisper-like) tilt."""
    env = np.full_like(freqs, 0.05)
    for f0, w in zip(formants, widths):
        env = env + np.exp(-0.5 * ((freqs - f0) / w) ** 2)
    tilt = freqs ** 2 / (freqs ** 2 + tilt_hz ** 2)
    return env * tilt


def _shaped_noise(rng, n, envelope_per_frame):
    """Overlap-add white noise whose per-frame spectrum follows the given
    envelopes (one row per frame on the rfft grid of _FRAME)."""
    window = np.hanning(_FRAME)
    out = np.zeros(n + 2 * _FRAME)
    n_frames = envelope_per_frame.shape[0]
    for t in range(n_frames):
        burst = rng.normal(size=_FRAME)
        spec = np.fft.rfft(burst * window)
        shaped = np.fft.irfft(spec * envelope_per_frame[t], n=_FRAME)
        start = t * _HOP
        out[start:start + _FRAME] += shaped * window
    return out[:n]


def speaker_profile(speaker_idx: int) -> dict:
    """Deterministic per-speaker timbre: formant ranges and syllable rate."""
    rng = np.random.default_rng(10_000 + speaker_idx)
    base = rng.uniform(0.85, 1.25)
    return {
        "f1_range": (500 * base, 1100 * base),
        "f2_range": (1600 * base, 3200 * base),
        "widths": (rng.uniform(150, 260), rng.uniform(280, 450)),
        "syllable_hz": rng.uniform(2.5, 4.5),
    }


def synth_whisper(rng, duration_s: float, profile: dict) -> AudioBuffer:
    n = int(duration_s * RATE)
    n_frames = max(n // _HOP + 2, 2)
    freqs = np.arange(_FRAME // 2 + 1) * RATE / _FRAME

    f1 = _interp_track(rng, max(int(duration_s * 3), 2), *profile["f1_range"], n_out=n_frames)
    f2 = _interp_track(rng, max(int(duration_s * 3), 2), *profile["f2_range"], n_out=n_frames)
    env = np.stack([_spectral_envelope(freqs, (f1[t], f2[t]), profile["widths"])
                    for t in range(n_frames)])
    x = _shaped_noise(rng, n, env)

    # syllabic amplitude modulation: quiet stretches keep a breath-noise
    # floor (real whisper closures are not digital silence), so the
    # temporal envelope stays the speech cue without making quiet frames
    # collide with the noise bed of mixtures
    mod = _interp_track(rng, max(int(duration_s * profile["syllable_hz"] * 2), 4),
                        0.10, 1.0, n_out=n) ** 1.8
    x = x * mod

    x = x / (np.sqrt(np.mean(x ** 2)) + 1e-12) * 0.08
    return AudioBuffer(np.clip(x, -1, 1), RATE)


def synth_noise(rng, kind: str, duration_s: float) -> AudioBuffer:
    n = int(duration_s * RATE)
    freqs = np.arange(_FRAME // 2 + 1) * RATE / _FRAME
    n_frames = n // _HOP + 2

    if kind == "hiss":
        # rubbing-style trigger: single frames are whisper-like (wandering
        # formants) but the amplitude stays flat and the spectral drift is
        # slower than articulation, so only temporal context gives it away
        f1 = _interp_track(rng, max(int(duration_s * 1.2), 2), 500.0, 1200.0, n_out=n_frames)
        f2 = _interp_track(rng, max(int(duration_s * 1.2), 2), 1500.0, 3400.0, n_out=n_frames)
        env = np.stack([_spectral_envelope(freqs, (f1[t], f2[t]), (200.0, 360.0))
                        for t in range(n_frames)])
        x = _shaped_noise(rng, n, env)
    elif kind == "crinkle":
        # wrapper/plastic crinkling: bright resonances mostly above the
        # whisper formant band, drifting slowly with a near-flat amplitude
        f1 = _interp_track(rng, max(int(duration_s * 0.8), 2), 2200.0, 3600.0, n_out=n_frames)
        f2 = _interp_track(rng, max(int(duration_s * 0.8), 2), 4500.0, 7000.0, n_out=n_frames)
        env = np.stack([_spectral_envelope(freqs, (f1[t], f2[t]), (400.0, 600.0))
                        for t in range(n_frames)])
        x = _shaped_noise(rng, n, env)
        x = x * _interp_track(rng, max(int(duration_s * 0.3), 2), 0.7, 1.0, n_out=n)
    elif kind == "hum":
        env = 1.0 / (1.0 + (freqs / 250.0) ** 4)
        x = _shaped_noise(rng, n, np.tile(env, (n_frames, 1)))
        x = x + 0.4 * np.std(x) * np.sin(2 * np.pi * 60.0 * np.arange(n) / RATE)
    elif kind == "taps":
        x = rng.normal(size=n) * 0.02  # faint bed so no slice is silent
        n_taps = rng.poisson(3.0 * duration_s)
        positions = rng.integers(0, max(n - 400, 1), size=n_taps)
        dur = 360
        t = np.arange(dur)
        for pos in positions:
            f = rng.uniform(900, 3800)
            click = np.exp(-t / rng.uniform(30, 90)) * np.sin(2 * np.pi * f * t / RATE)
            x[pos:pos + dur] += click * rng.uniform(2.0, 5.0)
    else:
        raise ValueError(f"unknown noise kind {kind!r}")

    x = x / (np.sqrt(np.mean(x ** 2)) + 1e-12) * 0.08
    return AudioBuffer(np.clip(x, -1, 1), RATE)


def make_synth_corpus(out_dir, seed: int = 0, n_speakers: int = 12,
                      utts_per_speaker: int = 12, utt_duration_s=(2.0, 3.0),
                      noise_duration_s: float = 120.0,
                      noise_types=NOISE_TYPES):
    """Write clean whisper utterances plus long trigger noises, with the
    metadata CSVs the corpus builder consumes. Speakers alternate m/f.
    Returns (utterances, noises)."""
    out_dir = Path(out_dir)
    clean_dir = out_dir / "clean"
    noise_dir = out_dir / "noise"
    clean_dir.mkdir(parents=True, exist_ok=True)
    noise_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)

    utterances = []
    for s in range(n_speakers):
        spk = f"spk{s:02d}"
        sex = "m" if s % 2 == 0 else "f"
        profile = speaker_profile(s)
        for u in range(utts_per_speaker):
            dur = rng.uniform(*utt_duration_s)
            buf = synth_whisper(rng, dur, profile)
            uid = f"{spk}_utt{u:03d}"
            path = clean_dir / f"{uid}.wav"
            write_wav(buf, path)
            utterances.append(UtteranceInfo(id=uid, path=str(path), speaker=spk, sex=sex))

    with open(clean_dir / "utterances.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "path", "speaker", "sex"])
        for u in utterances:
            writer.writerow([u.id, Path(u.path).name, u.speaker, u.sex])

    noises = []
    for kind in noise_types:
        buf = synth_noise(rng, kind, noise_duration_s)
        path = noise_dir / f"{kind}.wav"
        write_wav(buf, path)
        noises.append(NoiseInfo(id=kind, path=str(path), noise_type=kind))

    with open(noise_dir / "noises.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "path", "noise_type"])
        for nz in noises:
            writer.writerow([nz.id, Path(nz.path).name, nz.noise_type])

    return utterances, noises


def make_synth_recording(out_path, seed: int = 0, speaker_idx: int = 90,
                         section_s: float = 4.0, n_sections: int = 8,
                         snr_db: float = 3.0):
    """A long alternating recording (whisper / trigger noise / noisy
    whisper) with its ground-truth label track; the raw material for
    detector and harvesting tests."""
    rng = np.random.default_rng(seed)
    profile = speaker_profile(speaker_idx)
    pieces = []
    intervals = []
    cursor = 0.0
    kinds = ["whisper", "noise", "noisy_whisper"]
    for i in range(n_sections):
        kind = kinds[i % 3]
        if kind == "whisper":
            buf = synth_whisper(rng, section_s, profile)
            label = "clean_whisper"
        elif kind == "noise":
            buf = synth_noise(rng, NOISE_TYPES[i % len(NOISE_TYPES)], section_s)
            label = "noise"
        else:
            speech = synth_whisper(rng, section_s, profile)
            noise = synth_noise(rng, NOISE_TYPES[(i + 1) % len(NOISE_TYPES)], section_s + 1.0)
            from .datasets import mix_at_snr

            buf = mix_at_snr(speech, noise, snr_db, seed=int(rng.integers(2 ** 32))).mixture
            label = "noisy_whisper"
        pieces.append(buf.samples)
        end = cursor + buf.duration_s
        intervals.append(LabelInterval(cursor, end, label))
        cursor = end

    full = AudioBuffer(np.concatenate(pieces), RATE)
    write_wav(full, out_path)
    track = LabelTrack(intervals=intervals)
    track.write_csv(Path(out_path).with_suffix(".csv"))
    return full, track
