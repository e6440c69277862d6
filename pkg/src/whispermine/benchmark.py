"""End-to-end benchmark on the bundled synthetic corpus.

One frozen recipe, used by both scripts/run_wad_benchmark.py and the
acceptance suite: generate the synthetic whisper/trigger corpus, build
train and test mixture corpora over the 10/5/0 dB grid, train the three
classifiers, and evaluate per SNR. The CWAD stage then harvests trigger
noise from synthetic recordings with the trained LSTM, builds an
augmented clean-vs-noisy corpus, fine-tunes, and scores the held-out
split.
"""

from __future__ import annotations

import time
from pathlib import Path

from .datasets import CorpusManifest, build_noisy_corpus, split_speakers
from .detector import build_augmented_corpus, fine_tune_cwad, harvest_noise
from .eval import evaluate_manifest
from .models import Model, ModelSpec, save_model
from .pipeline import featurize_manifest, train_from_manifest
from .synth import make_synth_corpus, make_synth_recording

SCALES = {
    # ~25 minutes of audio, the acceptance configuration
    "full": dict(n_speakers=12, utts_per_speaker=12, utt_duration_s=(2.5, 3.5),
                 noise_duration_s=120.0, per_combo_train=18, per_combo_test=6,
                 train_males=4, train_females=4, test_males=2, test_females=2,
                 lstm_epochs=26, mlp_epochs=30),
    # a couple of minutes of audio, for smoke runs
    "smoke": dict(n_speakers=6, utts_per_speaker=4, utt_duration_s=(1.2, 1.8),
                  noise_duration_s=30.0, per_combo_train=4, per_combo_test=2,
                  train_males=2, train_females=2, test_males=1, test_females=1,
                  lstm_epochs=3, mlp_epochs=5),
}

SNRS = (10.0, 5.0, 0.0)
SEED_SYNTH = 7
SEED_SPLIT = 11
SEED_TRAIN_CORPUS = 13
SEED_TEST_CORPUS = 17
SEED_MODEL = 23


def model_spec(kind: str, scale: str = "full") -> ModelSpec:
    cfg = SCALES[scale]
    if kind == "svm":
        return ModelSpec(kind="svm", seed=SEED_MODEL)
    if kind == "mlp":
        return ModelSpec(kind="mlp", seed=SEED_MODEL, max_epochs=cfg["mlp_epochs"],
                         patience=8)
    return ModelSpec(kind="lstm", seed=SEED_MODEL, batch_size=64,
                     max_epochs=cfg["lstm_epochs"], patience=6, learning_rate=2e-3)


def build_benchmark_corpus(root, scale: str = "full"):
    """Synthetic sources + train/test mixture corpora + cached features.
    Returns (train manifest, test manifest, features dir)."""
    cfg = SCALES[scale]
    root = Path(root)
    utts, noises = make_synth_corpus(
        root / "synth", seed=SEED_SYNTH, n_speakers=cfg["n_speakers"],
        utts_per_speaker=cfg["utts_per_speaker"],
        utt_duration_s=cfg["utt_duration_s"],
        noise_duration_s=cfg["noise_duration_s"])
    splits = split_speakers(utts, seed=SEED_SPLIT,
                            train_males=cfg["train_males"],
                            train_females=cfg["train_females"],
                            test_males=cfg["test_males"],
                            test_females=cfg["test_females"])
    for u in utts:
        u.split = splits.get(u.id)
    man_train = build_noisy_corpus(utts, noises, root / "corpus_train", snrs=SNRS,
                                   per_combo=cfg["per_combo_train"],
                                   seed=SEED_TRAIN_CORPUS, pools=("train", "val"),
                                   manifest_name="train.jsonl")
    man_test = build_noisy_corpus(utts, noises, root / "corpus_test", snrs=SNRS,
                                  per_combo=cfg["per_combo_test"],
                                  seed=SEED_TEST_CORPUS, pools=("test",),
                                  manifest_name="test.jsonl")
    features_dir = root / "features"
    featurize_manifest(man_train, features_dir)
    featurize_manifest(man_test, features_dir)
    return man_train, man_test, features_dir


def run_wad_benchmark(root, scale: str = "full", kinds=("svm", "mlp", "lstm")):
    """Train and evaluate the classifiers. Returns
    {kind: {"model": Model, "report": report, "accuracy": {snr: acc},
    "train_seconds": t}} plus bookkeeping under "_meta"."""
    root = Path(root)
    t0 = time.time()
    man_train, man_test, features_dir = build_benchmark_corpus(root, scale)
    setup_s = time.time() - t0

    results = {"_meta": {"scale": scale, "setup_seconds": setup_s,
                         "n_train": len(man_train.entries),
                         "n_test": len(man_test.entries)}}
    for kind in kinds:
        t1 = time.time()
        model = train_from_manifest(man_train, model_spec(kind, scale),
                                    features_dir=features_dir, seq_stride=4)
        train_s = time.time() - t1
        report = evaluate_manifest(man_test, model, features_dir=features_dir)
        save_model(model, root / f"wad_{kind}.wadm")
        accuracy = {g["snr_db"]: g["accuracy"] for g in report["groups"]
                    if g["snr_db"] is not None}
        results[kind] = {"model": model, "report": report,
                         "accuracy": accuracy, "train_seconds": train_s}
    results["_meta"]["total_seconds"] = time.time() - t0
    return results


def run_cwad_benchmark(root, base_model: Model, scale: str = "full"):
    """Framework steps 2-5 on synthetic material: harvest trigger noise
    with the WAD model, augment fresh clean whisper with it, fine-tune,
    and evaluate clean-vs-noisy on the held-out split.

    Returns {"manifest", "model", "report", "harvested", "fractions"}.
    """
    from .audio import load_wav, write_wav
    from .synth import speaker_profile, synth_whisper

    import numpy as np

    root = Path(root)
    rec_dir = root / "recordings"
    rec_dir.mkdir(parents=True, exist_ok=True)

    # long recordings from unseen "performers": whisper / trigger / noisy
    # whisper sections, covering all trigger kinds
    harvested = []
    for i in range(3):
        wav = rec_dir / f"asmr{i}.wav"
        recording, _ = make_synth_recording(wav, seed=100 + i, speaker_idx=90 + i,
                                            section_s=5.0, n_sections=9)
        _, paths = harvest_noise(recording, base_model,
                                 out_dir=root / "harvested", recording_id=f"asmr{i}")
        harvested.extend(paths)
    # keep the longest few: enough trigger variety without exploding the
    # augmentation grid
    harvested = sorted(harvested, key=lambda p: Path(p).stat().st_size,
                       reverse=True)[:4]

    # clean whisper segments from further unseen speakers
    clean_dir = root / "clean_segments"
    clean_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(31)
    clean_paths = []
    n_clean = 24 if scale == "full" else 6
    for i in range(n_clean):
        buf = synth_whisper(rng, float(rng.uniform(1.5, 2.5)), speaker_profile(120 + i))
        p = clean_dir / f"seg{i:02d}.wav"
        write_wav(buf, p)
        clean_paths.append(p)

    # triggers are mixed in loud (5 / 0 / -5 dB): the CWAD's job is to
    # reject whisper that is audibly corrupted
    manifest = build_augmented_corpus(clean_paths, harvested, root / "augmented",
                                      snrs=(5.0, 0.0, -5.0), seed=37)
    cwad = fine_tune_cwad(base_model, manifest,
                          learning_rate=3e-4,
                          max_epochs=14 if scale == "full" else 2)
    save_model(cwad, root / "cwad_lstm.wadm")

    report = evaluate_manifest(manifest_subset(manifest, "test"), cwad,
                               positive_labels=("clean_whisper",))
    overall = next(g for g in report["groups"] if g["snr_db"] is None)
    return {"manifest": manifest, "model": cwad, "report": report,
            "harvested": harvested, "fractions": overall["confusion_fractions"]}


def manifest_subset(manifest: CorpusManifest, split: str) -> CorpusManifest:
    return CorpusManifest(entries=[e for e in manifest.entries if e.split == split])
