"""Acceptance suite: one test per criterion, each printing a PASS/FAIL
line. The synthetic end-to-end benchmark (shared by several criteria)
runs once per session; expect the full module to take 10-15 minutes.

Criteria that need the CHAINS + QUT corpora are optional: they run only
when WHISPERMINE_CHAINS_CSV / WHISPERMINE_QUT_CSV point at user-supplied
metadata files (see README), and are skipped otherwise.
"""

import os
import time

import numpy as np
import pytest

from whispermine.audio import AudioBuffer, load_wav, resample
from whispermine.datasets import append_silence, mix_at_snr, recompute_snr_db
from whispermine.eval import ConfusionMatrix, metrics, roc_and_threshold
from whispermine.features import RASTA_NUM, rasta_filter
from whispermine.linpred import levinson_durbin, toeplitz_solve
from whispermine.models import ModelSpec, gradient_check


def announce(name, passed=True):
    print(f"\nACCEPTANCE {name}: {'PASS' if passed else 'FAIL'}")


class Criterion:
    """Context manager printing one PASS/FAIL line per criterion."""

    def __init__(self, name):
        self.name = name

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        announce(self.name, passed=exc_type is None)
        return False


# --------------------------------------------------------------- 1. DSP


def test_dsp_oracle_suite():
    with Criterion("dsp-oracle (Levinson vs Toeplitz solve, AR(2) recovery)"):
        t0 = time.time()
        rng = np.random.default_rng(101)
        for _ in range(1000):
            p = int(rng.integers(1, 21))
            x = rng.normal(size=6 * (p + 1))
            n = len(x)
            r = np.array([np.dot(x[:n - k], x[k:]) / n for k in range(p + 1)])
            a, _ = levinson_durbin(r)
            direct = toeplitz_solve(r)
            denom = max(np.max(np.abs(direct)), 1e-12)
            assert np.max(np.abs(a - direct)) / denom < 1e-8

        n = 100_000
        e = rng.normal(size=n)
        x = np.zeros(n)
        for i in range(2, n):
            x[i] = 0.75 * x[i - 1] - 0.5 * x[i - 2] + e[i]
        r = np.array([np.dot(x[:n - k], x[k:]) / n for k in range(3)])
        a, _ = levinson_durbin(r)
        assert abs(a[0] - 0.75) < 0.02 and abs(a[1] + 0.5) < 0.02
        elapsed = time.time() - t0
        assert elapsed < 10.0, f"DSP oracle suite took {elapsed:.1f}s"


# --------------------------------------------------------------- 2. RASTA


def test_rasta_filter_against_direct_recursion():
    with Criterion("rasta-filter (exact impulse response, DC rejection)"):
        imp = np.zeros(128)
        imp[0] = 1.0

        def direct(x):
            y = np.zeros(len(x))
            for n in range(4, len(x)):
                acc = 0.98 * y[n - 1] if n > 4 else 0.0
                for k in range(5):
                    if n - k >= 0:
                        acc += RASTA_NUM[k] * x[n - k]
                y[n] = acc
            y[:4] = y[4]
            return y

        np.testing.assert_array_equal(rasta_filter(imp), direct(imp))
        dc = rasta_filter(np.full(200, 1.0))
        assert abs(dc[199]) <= 1e-3


# --------------------------------------------------------------- 3. gradients


def test_gradient_checks():
    with Criterion("gradient-check (MLP + LSTM vs central differences)"):
        t0 = time.time()
        rng = np.random.default_rng(7)
        mlp_spec = ModelSpec(kind="mlp", seed=1)  # full 57 -> 64,64,8 -> 1
        X = rng.normal(size=(8, 57))
        y = rng.integers(0, 2, size=8)
        err = gradient_check(mlp_spec, X, y, n_params=200, seed=2)
        assert err <= 1e-4, f"MLP gradient error {err:.2e}"

        lstm_spec = ModelSpec(kind="lstm", seed=3)  # full 2x64, seq 30
        Xs = rng.normal(size=(4, 30, 57))
        ys = rng.integers(0, 2, size=4)
        err = gradient_check(lstm_spec, Xs, ys, n_params=200, seed=4)
        assert err <= 1e-4, f"LSTM gradient error {err:.2e}"
        elapsed = time.time() - t0
        assert elapsed < 60.0, f"gradient checks took {elapsed:.1f}s"


# --------------------------------------------------------------- 4. SNR


def test_snr_exactness_over_grid():
    with Criterion("snr-exactness (recomputed within 1e-6 dB over 10/5/0)"):
        rng = np.random.default_rng(11)
        for trial in range(20):
            speech = AudioBuffer(rng.uniform(-0.5, 0.5, int(rng.integers(4000, 16000))), 16000)
            noise = AudioBuffer(rng.uniform(-0.5, 0.5, 64000), 16000)
            doubled, _ = append_silence(speech)
            for snr in (10.0, 5.0, 0.0):
                res = mix_at_snr(doubled, noise, snr, seed=trial,
                                 power_span=len(speech.samples))
                back = recompute_snr_db(doubled, noise, res.gain, res.noise_offset,
                                        power_span=len(speech.samples))
                assert abs(back - snr) < 1e-6


# --------------------------------------------------------------- 5. metrics


def test_metrics_arithmetic_from_published_fractions():
    with Criterion("metrics-arithmetic (confusion fractions -> 0.82 / F1 0.8176)"):
        cm = ConfusionMatrix.from_fractions(0.43, 0.064, 0.11, 0.39, total=100000)
        m = metrics(cm)
        assert round(m["accuracy"], 2) == 0.82
        assert abs(m["f1"] - 0.8176) < 5e-4


# --------------------------------------------------------------- 6. ROC


def test_roc_auc_and_youden_oracles():
    with Criterion("roc (AUC = Mann-Whitney, Youden = exhaustive sweep, 100 sets)"):
        rng = np.random.default_rng(13)
        done = 0
        while done < 100:
            n = int(rng.integers(5, 300))
            probs = np.round(rng.uniform(size=n), 2)
            labels = rng.integers(0, 2, size=n)
            if labels.min() == labels.max():
                continue
            curve, thr = roc_and_threshold(probs, labels)

            pos, neg = probs[labels == 1], probs[labels == 0]
            wins = sum(np.sum(p > neg) + 0.5 * np.sum(p == neg) for p in pos)
            mw = wins / (len(pos) * len(neg))
            assert abs(curve.auc - mw) < 1e-9

            best_j, best_t = -np.inf, None
            for t in sorted(set(probs)):
                preds = probs >= t
                j = (np.sum(preds & (labels == 1)) / (labels == 1).sum()
                     - np.sum(preds & (labels == 0)) / (labels == 0).sum())
                if j > best_j + 1e-15 or (abs(j - best_j) <= 1e-15 and t < best_t):
                    best_j, best_t = j, t
            assert thr == pytest.approx(best_t, abs=1e-9)
            done += 1


# --------------------------------------------------------------- 7+9. end-to-end


@pytest.fixture(scope="session")
def benchmark_results(tmp_path_factory):
    from whispermine.benchmark import run_wad_benchmark

    root = tmp_path_factory.mktemp("bench")
    t0 = time.time()
    results = run_wad_benchmark(root, scale="full")
    results["_meta"]["wall_seconds"] = time.time() - t0
    results["_meta"]["root"] = root
    return results


def test_synthetic_end_to_end_ordering(benchmark_results):
    with Criterion("end-to-end (LSTM >= MLP >= / SVM at every SNR, "
                   "LSTM >= 0.90 at 10 dB, < 15 min)"):
        acc = {k: benchmark_results[k]["accuracy"] for k in ("svm", "mlp", "lstm")}
        print(f"\n  accuracies: { {k: {s: round(v, 4) for s, v in a.items()} for k, a in acc.items()} }")
        for snr in (10.0, 5.0, 0.0):
            assert acc["lstm"][snr] >= acc["mlp"][snr], f"LSTM < MLP at {snr} dB"
            assert acc["lstm"][snr] >= acc["svm"][snr], f"LSTM < SVM at {snr} dB"
        assert acc["lstm"][10.0] >= 0.90
        wall = benchmark_results["_meta"]["wall_seconds"]
        assert wall < 900, f"end-to-end took {wall:.0f}s"


@pytest.fixture(scope="session")
def cwad_results(benchmark_results):
    from whispermine.benchmark import run_cwad_benchmark

    return run_cwad_benchmark(benchmark_results["_meta"]["root"],
                              benchmark_results["lstm"]["model"], scale="full")


def test_cwad_caution_property(cwad_results):
    with Criterion("cwad-caution (FP fraction <= FN fraction on held-out)"):
        fr = cwad_results["fractions"]
        print(f"\n  held-out fractions: { {k: round(v, 4) for k, v in fr.items()} }")
        assert len(cwad_results["harvested"]) > 0, "no noise harvested"
        assert fr["fp"] <= fr["fn"], f"fp {fr['fp']:.4f} > fn {fr['fn']:.4f}"


def test_cwad_finetune_beats_base(benchmark_results, cwad_results):
    from whispermine.benchmark import manifest_subset
    from whispermine.eval import evaluate_manifest

    with Criterion("cwad-improvement (fine-tuned F1 > base model on clean-vs-noisy)"):
        base_report = evaluate_manifest(manifest_subset(cwad_results["manifest"], "val"),
                                        benchmark_results["lstm"]["model"],
                                        positive_labels=("clean_whisper",))
        tuned_report = evaluate_manifest(manifest_subset(cwad_results["manifest"], "val"),
                                         cwad_results["model"],
                                         positive_labels=("clean_whisper",))
        base_f1 = next(g for g in base_report["groups"] if g["snr_db"] is None)["f1"]
        tuned_f1 = next(g for g in tuned_report["groups"] if g["snr_db"] is None)["f1"]
        base_f1 = base_f1 if base_f1 is not None else 0.0
        print(f"\n  base F1 {base_f1:.4f} -> fine-tuned F1 {tuned_f1:.4f}")
        assert tuned_f1 > base_f1


# --------------------------------------------------------------- 8. conditional


@pytest.mark.skipif(
    not (os.environ.get("WHISPERMINE_CHAINS_CSV") and os.environ.get("WHISPERMINE_QUT_CSV")),
    reason="optional reproduction: set WHISPERMINE_CHAINS_CSV and "
           "WHISPERMINE_QUT_CSV to run against the real corpora (see README)")
def test_conditional_reproduction_with_real_corpora(tmp_path):
    from whispermine.benchmark import model_spec
    from whispermine.datasets import (build_noisy_corpus, read_noise_csv,
                                      read_utterance_csv, split_speakers)
    from whispermine.eval import evaluate_manifest
    from whispermine.pipeline import featurize_manifest, train_from_manifest

    with Criterion("conditional-reproduction (CHAINS+QUT, LSTM within 3pp of 95.71)"):
        utts = read_utterance_csv(os.environ["WHISPERMINE_CHAINS_CSV"])
        noises = read_noise_csv(os.environ["WHISPERMINE_QUT_CSV"])
        splits = split_speakers(utts, seed=11)  # paper counts: 15M+12F / 5M+4F
        for u in utts:
            u.split = splits.get(u.id)
        man_train = build_noisy_corpus(utts, noises, tmp_path / "train", snrs=(10, 5, 0),
                                       per_combo=50, seed=13, pools=("train", "val"),
                                       manifest_name="train.jsonl")
        man_test = build_noisy_corpus(utts, noises, tmp_path / "test", snrs=(10, 5, 0),
                                      per_combo=50, seed=17, pools=("test",),
                                      manifest_name="test.jsonl")
        feats = tmp_path / "features"
        featurize_manifest(man_train, feats)
        featurize_manifest(man_test, feats)
        model = train_from_manifest(man_train, model_spec("lstm"), features_dir=feats,
                                    seq_stride=4)
        report = evaluate_manifest(man_test, model, features_dir=feats)
        acc10 = next(g["accuracy"] for g in report["groups"] if g["snr_db"] == 10.0)
        print(f"\n  LSTM test accuracy at 10 dB: {acc10:.4f} (published: 0.9571)")
        assert abs(acc10 - 0.9571) <= 0.03


# --------------------------------------------------------------- 10. t-SNE/PCA


def test_tsne_and_pca_quality():
    from whispermine.labeller.projection import project_pca, project_tsne

    with Criterion("tsne-pca (monotone KL, orthonormal axes, silhouette >= 0.5)"):
        rng = np.random.default_rng(17)
        a = rng.normal(0, 1, size=(100, 40))
        b = rng.normal(0, 1, size=(100, 40))
        a[:, 0] += 6.0
        b[:, 0] -= 6.0
        X = np.concatenate([a, b])
        labels = np.array([0] * 100 + [1] * 100)

        res = project_tsne(X, perplexity=30, iters=1000, seed=19)
        assert np.max(np.diff(res.kl_trace[100:])) <= 1e-6

        _, axes, _ = project_pca(X)
        np.testing.assert_allclose(axes.T @ axes, np.eye(2), atol=1e-9)

        coords = res.coords
        d = np.sqrt(((coords[:, None] - coords[None, :]) ** 2).sum(-1))
        sil = np.zeros(len(coords))
        for i in range(len(coords)):
            same = labels == labels[i]
            same[i] = False
            a_i = d[i][same].mean()
            b_i = d[i][labels != labels[i]].mean()
            sil[i] = (b_i - a_i) / max(a_i, b_i)
        print(f"\n  silhouette: {sil.mean():.3f}")
        assert sil.mean() >= 0.5


# --------------------------------------------------------------- 11. throughput


def test_labelling_throughput():
    from whispermine.labeller.projection import project_pca
    from whispermine.labeller.snippets import snippetize

    with Criterion("labelling-throughput (30 min: snippetize+embed+PCA < 60 s)"):
        rng = np.random.default_rng(23)
        buf = AudioBuffer(np.clip(rng.normal(0, 0.1, 16000 * 1800), -1, 1), 16000)
        t0 = time.time()
        snips = snippetize(buf, "thirty", snippet_ms=500)
        emb = np.stack([s.embedding for s in snips])
        coords, _, _ = project_pca(emb)
        elapsed = time.time() - t0
        print(f"\n  {len(snips)} snippets in {elapsed:.1f}s")
        assert len(snips) == 3600
        assert coords.shape == (3600, 2)
        assert elapsed < 60.0
