"""Corpus construction: SNR-controlled whisper+noise mixtures with
speaker-disjoint splits, appended silences and frame labels.

On-disk artifacts: 16 kHz mono WAV mixtures, per-utterance label CSVs
(`start_s,end_s,label`, six-decimal seconds) and a JSON-lines manifest.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .audio import AudioBuffer, load_wav, resample, write_wav
from .errors import DatasetError, MissingInputError

LABEL_VOCAB = ("whisper", "nonspeech", "clean_whisper", "noisy_whisper", "noise", "other")
TARGET_RATE = 16000


@dataclass
class LabelInterval:
    start_s: float
    end_s: float
    label: str


@dataclass
class LabelTrack:
    intervals: list = field(default_factory=list)

    def __post_init__(self):
        self.intervals = sorted(self.intervals, key=lambda iv: iv.start_s)
        prev_end = -np.inf
        for iv in self.intervals:
            if not 0 <= iv.start_s < iv.end_s:
                raise ValueError(f"bad interval [{iv.start_s}, {iv.end_s})")
            if iv.start_s < prev_end - 1e-9:
                raise ValueError("overlapping label intervals")
            prev_end = iv.end_s

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["start_s", "end_s", "label"])
            for iv in self.intervals:
                writer.writerow([f"{iv.start_s:.6f}", f"{iv.end_s:.6f}", iv.label])

    @classmethod
    def read_csv(cls, path) -> "LabelTrack":
        path = Path(path)
        if not path.exists():
            raise MissingInputError(f"label file not found: {path}")
        intervals = []
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                intervals.append(LabelInterval(float(row["start_s"]),
                                               float(row["end_s"]), row["label"]))
        return cls(intervals=intervals)


@dataclass
class UtteranceInfo:
    id: str
    path: str
    speaker: str
    sex: str
    split: str | None = None


@dataclass
class NoiseInfo:
    id: str
    path: str
    noise_type: str


@dataclass
class ManifestEntry:
    id: str
    mixture_path: str
    speaker: str
    sex: str
    snr_db: float
    noise_type: str
    split: str
    label_path: str
    # audit fields: enough to recompute the mixture SNR from the originals
    clean_path: str = ""
    noise_path: str = ""
    noise_offset: int = 0
    gain: float = 1.0
    peak_scale: float = 1.0
    power_span: int = 0


@dataclass
class CorpusManifest:
    entries: list = field(default_factory=list)

    def save(self, path) -> None:
        with open(path, "w") as fh:
            for entry in sorted(self.entries, key=lambda e: e.id):
                fh.write(json.dumps(asdict(entry)) + "\n")

    @classmethod
    def load(cls, path) -> "CorpusManifest":
        path = Path(path)
        if not path.exists():
            raise MissingInputError(f"manifest not found: {path}")
        base = path.parent
        entries = []
        for line in path.read_text().splitlines():
            if not line.strip():
                continue
            d = json.loads(line)
            for key in ("mixture_path", "label_path", "clean_path", "noise_path"):
                if d.get(key) and not Path(d[key]).is_absolute():
                    d[key] = str(base / d[key])
            entries.append(ManifestEntry(**d))
        return cls(entries=entries)

    def check_speaker_disjointness(self) -> None:
        train_val = {e.speaker for e in self.entries if e.split in ("train", "val")}
        test = {e.speaker for e in self.entries if e.split == "test"}
        shared = train_val & test
        if shared:
            raise DatasetError(f"speakers leak across train/test: {sorted(shared)}")


def read_utterance_csv(path) -> list:
    """Clean-speech metadata: CSV with columns id,path,speaker,sex
    (paths relative to the CSV's directory)."""
    path = Path(path)
    if not path.exists():
        raise MissingInputError(f"utterance metadata not found: {path}")
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            p = Path(row["path"])
            if not p.is_absolute():
                p = path.parent / p
            out.append(UtteranceInfo(id=row["id"], path=str(p),
                                     speaker=row["speaker"], sex=row["sex"].lower()))
    return out


def read_noise_csv(path) -> list:
    path = Path(path)
    if not path.exists():
        raise MissingInputError(f"noise metadata not found: {path}")
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            p = Path(row["path"])
            if not p.is_absolute():
                p = path.parent / p
            out.append(NoiseInfo(id=row["id"], path=str(p), noise_type=row["noise_type"]))
    return out


@dataclass
class MixResult:
    mixture: AudioBuffer
    gain: float
    peak_scale: float
    noise_offset: int


def mix_at_snr(speech: AudioBuffer, noise: AudioBuffer, snr_db: float,
               seed: int = 0, power_span: int | None = None) -> MixResult:
    """Scale a seeded noise slice so that 10*log10(P_s / (g^2 P_n)) hits
    the target, then add it to the speech.

    P_s is the mean square of the first `power_span` speech samples (whole
    buffer by default; corpus building passes the pre-silence utterance
    length). P_n is the mean square of the selected noise slice. The
    mixture is peak-normalized only when it exceeds full scale; the factor
    is reported so SNR stays auditable.
    """
    if speech.sample_rate_hz != noise.sample_rate_hz:
        raise ValueError("speech and noise must share a sample rate")
    n = len(speech.samples)
    if len(noise.samples) < n:
        raise DatasetError("noise recording shorter than the speech signal")
    span = n if power_span is None else int(power_span)
    if not 0 < span <= n:
        raise ValueError("power_span out of range")

    rng = np.random.default_rng(seed)
    offset = int(rng.integers(0, len(noise.samples) - n + 1))
    slice_ = noise.samples[offset:offset + n]

    p_s = float(np.mean(speech.samples[:span] ** 2))
    p_n = float(np.mean(slice_ ** 2))
    if p_s == 0.0:
        raise DatasetError("silent speech: cannot define SNR")
    if p_n == 0.0:
        raise DatasetError("silent noise: cannot define SNR")

    gain = float(np.sqrt(p_s / (p_n * 10.0 ** (snr_db / 10.0))))
    mixture = speech.samples + gain * slice_
    peak = float(np.max(np.abs(mixture))) if n else 0.0
    peak_scale = 1.0 / peak if peak > 1.0 else 1.0
    if peak_scale != 1.0:
        mixture = mixture * peak_scale
    return MixResult(mixture=AudioBuffer(mixture, speech.sample_rate_hz),
                     gain=gain, peak_scale=peak_scale, noise_offset=offset)


def recompute_snr_db(speech: AudioBuffer, noise: AudioBuffer, gain: float,
                     noise_offset: int, power_span: int | None = None) -> float:
    """Oracle-side recomputation of a mixture's SNR from the originals."""
    n = len(speech.samples)
    span = n if power_span is None else int(power_span)
    slice_ = noise.samples[noise_offset:noise_offset + n]
    p_s = float(np.mean(speech.samples[:span] ** 2))
    p_n = float(np.mean((gain * slice_) ** 2))
    return 10.0 * np.log10(p_s / p_n)


def append_silence(speech: AudioBuffer, labels: LabelTrack | None = None):
    """Double the signal with digital zeros; extend the label track with a
    matching nonspeech interval. Without a track, the whole input is
    labelled whisper."""
    n = len(speech.samples)
    dur = n / speech.sample_rate_hz
    out = AudioBuffer(np.concatenate([speech.samples, np.zeros(n)]),
                      speech.sample_rate_hz)
    if n == 0:
        return out, LabelTrack()
    intervals = (list(labels.intervals) if labels is not None
                 else [LabelInterval(0.0, dur, "whisper")])
    intervals.append(LabelInterval(dur, 2.0 * dur, "nonspeech"))
    return out, LabelTrack(intervals=intervals)


def split_speakers(utterances: list, seed: int = 0, train_males: int = 15,
                   train_females: int = 12, test_males: int = 5,
                   test_females: int = 4, val_fraction: float = 0.2) -> dict:
    """Speaker-disjoint split honoring per-sex counts, then a per-speaker
    stratified move of round(val_fraction * n) training utterances to val.
    Returns {utterance id: split}; speakers beyond the configured counts
    are left unassigned (their utterances are omitted)."""
    rng = np.random.default_rng(seed)
    by_sex = {"m": sorted({u.speaker for u in utterances if u.sex == "m"}),
              "f": sorted({u.speaker for u in utterances if u.sex == "f"})}
    need = {"m": train_males + test_males, "f": train_females + test_females}
    for sex in "mf":
        if len(by_sex[sex]) < need[sex]:
            raise DatasetError(
                f"need {need[sex]} speakers of sex {sex!r}, have {len(by_sex[sex])}")

    assignment = {}
    for sex, n_train, n_test in (("m", train_males, test_males),
                                 ("f", train_females, test_females)):
        chosen = rng.choice(by_sex[sex], size=n_train + n_test, replace=False)
        for spk in chosen[:n_train]:
            assignment[spk] = "train"
        for spk in chosen[n_train:]:
            assignment[spk] = "test"

    splits = {}
    by_speaker = {}
    for u in utterances:
        by_speaker.setdefault(u.speaker, []).append(u)
    for spk in sorted(by_speaker):
        split = assignment.get(spk)
        if split is None:
            continue
        utts = sorted(by_speaker[spk], key=lambda u: u.id)
        if split == "test":
            for u in utts:
                splits[u.id] = "test"
            continue
        n_val = int(round(val_fraction * len(utts)))
        val_ids = set(rng.choice([u.id for u in utts], size=n_val, replace=False))
        for u in utts:
            splits[u.id] = "val" if u.id in val_ids else "train"
    return splits


def label_frames(track: LabelTrack, n_frames: int, window_s: float = 0.040,
                 hop_s: float = 0.020, positive=("whisper",)) -> np.ndarray:
    """Binary per-frame labels: 1 when >= 50% of the frame's span overlaps
    intervals carrying a positive label (ties count as positive)."""
    starts = np.arange(n_frames) * hop_s
    ends = starts + window_s
    overlap = np.zeros(n_frames)
    pos = set(positive)
    for iv in track.intervals:
        if iv.label in pos:
            overlap += np.clip(np.minimum(ends, iv.end_s) - np.maximum(starts, iv.start_s),
                               0.0, None)
    return (overlap >= 0.5 * window_s - 1e-12).astype(np.uint8)


def build_noisy_corpus(utterances: list, noises: list, out_dir,
                       snrs=(10.0, 5.0, 0.0), per_combo: int = 50, seed: int = 0,
                       pools=("train", "val"), manifest_name: str = "manifest.jsonl",
                       target_rate: int = TARGET_RATE) -> CorpusManifest:
    """Materialize the mixture corpus.

    For each (noise type, SNR) combination, `per_combo` utterances are
    sampled without replacement from the requested split pools. Every
    selected utterance is resampled to the target rate, doubled with
    appended silence, and mixed with a seeded slice of one noise recording
    of that type. SNR power is measured over the pre-silence utterance.
    Emits WAVs, label CSVs and a manifest (sorted by id, so output is
    deterministic for a given seed).
    """
    out_dir = Path(out_dir)
    (out_dir / "audio").mkdir(parents=True, exist_ok=True)
    (out_dir / "labels").mkdir(parents=True, exist_ok=True)

    pool = sorted((u for u in utterances if u.split in pools), key=lambda u: u.id)
    noise_by_type = {}
    for nz in noises:
        noise_by_type.setdefault(nz.noise_type, []).append(nz)
    for k in noise_by_type:
        noise_by_type[k].sort(key=lambda nz: nz.id)

    rng = np.random.default_rng(seed)
    entries = []
    audio_cache: dict = {}
    noise_cache: dict = {}

    for noise_type in sorted(noise_by_type):
        for snr in snrs:
            if per_combo == 0:
                continue
            if len(pool) < per_combo:
                raise DatasetError(
                    f"pool {pools} has {len(pool)} utterances, need {per_combo} "
                    f"for combo ({noise_type}, {snr} dB)")
            chosen = rng.choice(len(pool), size=per_combo, replace=False)
            for idx in sorted(chosen):
                utt = pool[idx]
                if utt.id not in audio_cache:
                    buf = resample(load_wav(utt.path), target_rate)
                    audio_cache[utt.id] = append_silence(buf)
                doubled, track = audio_cache[utt.id]
                span = len(doubled.samples) // 2

                candidates = [nz for nz in noise_by_type[noise_type]]
                lengths = {}
                for nz in candidates:
                    if nz.id not in noise_cache:
                        noise_cache[nz.id] = resample(load_wav(nz.path), target_rate)
                    lengths[nz.id] = len(noise_cache[nz.id].samples)
                usable = [nz for nz in candidates if lengths[nz.id] >= len(doubled.samples)]
                if not usable:
                    raise DatasetError(
                        f"no {noise_type!r} recording is >= {len(doubled.samples)} samples")
                nz = usable[int(rng.integers(0, len(usable)))]
                mix_seed = int(rng.integers(0, 2 ** 62))
                result = mix_at_snr(doubled, noise_cache[nz.id], snr,
                                    seed=mix_seed, power_span=span)

                entry_id = f"{utt.id}__{noise_type}__snr{snr:g}"
                wav_rel = f"audio/{entry_id}.wav"
                lab_rel = f"labels/{entry_id}.csv"
                write_wav(result.mixture, out_dir / wav_rel)
                track.write_csv(out_dir / lab_rel)
                entries.append(ManifestEntry(
                    id=entry_id, mixture_path=wav_rel, speaker=utt.speaker,
                    sex=utt.sex, snr_db=float(snr), noise_type=noise_type,
                    split=utt.split, label_path=lab_rel, clean_path=utt.path,
                    noise_path=nz.path, noise_offset=result.noise_offset,
                    gain=result.gain, peak_scale=result.peak_scale,
                    power_span=span))

    manifest = CorpusManifest(entries=entries)
    manifest.save(out_dir / manifest_name)
    return CorpusManifest.load(out_dir / manifest_name)
