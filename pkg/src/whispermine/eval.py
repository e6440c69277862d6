"""Frame-level evaluation: confusion counts, accuracy/F1, ROC sweeps and
Youden threshold selection, plus manifest-level report generation."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DatasetError, MissingInputError


@dataclass
class ConfusionMatrix:
    tn: int
    fp: int
    fn: int
    tp: int

    @property
    def total(self) -> int:
        return self.tn + self.fp + self.fn + self.tp

    def fractions(self) -> dict:
        t = self.total
        if t == 0:
            raise DatasetError("empty confusion matrix")
        return {"tn": self.tn / t, "fp": self.fp / t, "fn": self.fn / t, "tp": self.tp / t}

    @classmethod
    def from_fractions(cls, tn: float, fp: float, fn: float, tp: float, total: int):
        """Counts = round(fraction * total); fractions are assumed to sum to 1."""
        return cls(tn=round(tn * total), fp=round(fp * total),
                   fn=round(fn * total), tp=round(tp * total))


def confusion(labels, predictions) -> ConfusionMatrix:
    y = np.asarray(labels).astype(bool)
    p = np.asarray(predictions).astype(bool)
    if y.shape != p.shape:
        raise ValueError(f"length mismatch: {y.shape} vs {p.shape}")
    return ConfusionMatrix(
        tn=int(np.sum(~y & ~p)),
        fp=int(np.sum(~y & p)),
        fn=int(np.sum(y & ~p)),
        tp=int(np.sum(y & p)),
    )


def metrics(cm: ConfusionMatrix) -> dict:
    """Accuracy, precision, recall, F1. Undefined ratios (zero denominator)
    are reported as None rather than 0."""
    if cm.total == 0:
        raise DatasetError("empty confusion matrix")
    out = {"accuracy": (cm.tp + cm.tn) / cm.total}
    out["precision"] = cm.tp / (cm.tp + cm.fp) if cm.tp + cm.fp > 0 else None
    out["recall"] = cm.tp / (cm.tp + cm.fn) if cm.tp + cm.fn > 0 else None
    denom = 2 * cm.tp + cm.fp + cm.fn
    out["f1"] = 2 * cm.tp / denom if denom > 0 else None
    return out


@dataclass
class RocCurve:
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray  # same length; thresholds[0] = +inf at (0, 0)
    auc: float


def roc_and_threshold(probs, labels):
    """Sweep every distinct score as a threshold (predict 1 when
    prob >= threshold), build the ROC curve with trapezoidal AUC, and pick
    the threshold maximizing Youden's J = tpr - fpr (ties -> lowest
    threshold). Requires both classes present."""
    p = np.asarray(probs, dtype=np.float64)
    y = np.asarray(labels).astype(bool)
    if p.shape != y.shape:
        raise ValueError("probs and labels must have equal length")
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DatasetError("ROC needs both classes present")

    order = np.argsort(-p, kind="stable")
    ps = p[order]
    ys = y[order]
    distinct = np.flatnonzero(np.diff(ps)) if len(ps) > 1 else np.array([], dtype=int)
    ends = np.concatenate([distinct, [len(ps) - 1]])  # last index of each tie group

    tp_cum = np.cumsum(ys)[ends]
    fp_cum = np.cumsum(~ys)[ends]
    tpr = np.concatenate([[0.0], tp_cum / n_pos])
    fpr = np.concatenate([[0.0], fp_cum / n_neg])
    thresholds = np.concatenate([[np.inf], ps[ends]])

    auc = float(np.trapezoid(tpr, fpr))
    j = tpr - fpr
    best_j = j.max()
    # ties -> the lowest threshold among maximizers
    candidates = np.flatnonzero(j >= best_j - 1e-15)
    idx = candidates[np.argmin(thresholds[candidates])]
    thr = float(thresholds[idx])
    if not np.isfinite(thr):
        thr = float(ps[0])
    thr = min(max(thr, 1e-9), 1.0 - 1e-9)
    return RocCurve(fpr=fpr, tpr=tpr, thresholds=thresholds, auc=auc), thr


def read_prediction_csv(path) -> np.ndarray:
    """External per-utterance prediction file: CSV `frame_index,prob`."""
    path = Path(path)
    if not path.exists():
        raise MissingInputError(f"prediction file not found: {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        rows = [row for row in reader if row and row[0] != "frame_index"]
    idx = np.array([int(r[0]) for r in rows])
    probs = np.array([float(r[1]) for r in rows])
    out = np.zeros(idx.max() + 1 if len(idx) else 0)
    out[idx] = probs
    return out


def write_prediction_csv(probs, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["frame_index", "prob"])
        for i, p in enumerate(np.asarray(probs)):
            writer.writerow([i, f"{p:.8f}"])


def _group_scores(probs, labels, threshold):
    cm = confusion(labels, probs >= threshold)
    m = metrics(cm)
    y = np.asarray(labels).astype(bool)
    if y.any() and not y.all():
        curve, _ = roc_and_threshold(probs, labels)
        auc = curve.auc
    else:
        auc = None
    return {"n_frames": int(len(labels)), "confusion_fractions": cm.fractions(),
            "auc": auc, **m}


def evaluate_manifest(manifest, model=None, positive_labels=("whisper",),
                      predictions_dir=None, features_dir=None) -> dict:
    """Score a materialized corpus manifest.

    Probabilities come either from `model` (features computed or loaded
    from `features_dir`) or from external prediction CSVs named
    `<entry id>.csv` in `predictions_dir`. The report groups frames per
    split, and per (split, snr_db) within each split, mirroring the
    validation / test-at-SNR presentation of WAD results.
    """
    from . import pipeline

    entries = pipeline.manifest_entries(manifest)
    if not entries:
        raise DatasetError("empty manifest: nothing to evaluate")
    if model is None and predictions_dir is None:
        raise ValueError("need a model or a predictions directory")

    threshold = 0.5 if model is None else model.threshold
    per_entry = {}
    for entry in entries:
        if predictions_dir is not None:
            probs = read_prediction_csv(Path(predictions_dir) / f"{entry.id}.csv")
        else:
            probs = pipeline.entry_probs(entry, model, features_dir=features_dir)
        labels = pipeline.entry_frame_labels(entry, positive_labels, len(probs))
        per_entry[entry.id] = (entry, probs, labels)

    groups = []
    split_names = sorted({e.split for e, _, _ in per_entry.values()})
    for split in split_names:
        items = [(e, p, l) for e, p, l in per_entry.values() if e.split == split]
        probs = np.concatenate([p for _, p, _ in items])
        labels = np.concatenate([l for _, _, l in items])
        groups.append({"split": split, "snr_db": None,
                       **_group_scores(probs, labels, threshold)})
        for snr in sorted({e.snr_db for e, _, _ in items}, reverse=True):
            sub = [(p, l) for e, p, l in items if e.snr_db == snr]
            probs = np.concatenate([p for p, _ in sub])
            labels = np.concatenate([l for _, l in sub])
            groups.append({"split": split, "snr_db": snr,
                           **_group_scores(probs, labels, threshold)})

    return {
        "classifier": "external" if model is None else model.spec.kind,
        "task": "external" if model is None else model.task,
        "threshold": threshold,
        "positive_labels": list(positive_labels),
        "groups": groups,
    }


def format_report(report: dict) -> str:
    lines = [
        f"classifier: {report['classifier']}  threshold: {report['threshold']:.4f}",
        f"{'split':<12}{'snr_db':>8}{'frames':>10}{'acc':>9}{'f1':>9}{'auc':>9}",
    ]
    for g in report["groups"]:
        snr = "all" if g["snr_db"] is None else f"{g['snr_db']:g}"
        fmt = lambda v: "   -  " if v is None else f"{v:.4f}"
        lines.append(f"{g['split']:<12}{snr:>8}{g['n_frames']:>10}"
                     f"{fmt(g['accuracy']):>9}{fmt(g['f1']):>9}{fmt(g['auc']):>9}")
    return "\n".join(lines)


def write_report(report: dict, path) -> None:
    Path(path).write_text(json.dumps(report, indent=2) + "\n")
