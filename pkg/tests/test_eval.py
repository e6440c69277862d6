import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from whispermine.errors import DatasetError
from whispermine.eval import ConfusionMatrix, confusion, metrics, roc_and_threshold


def mann_whitney_auc(probs, labels):
    """Brute-force pairwise ranking probability (ties count half)."""
    probs = np.asarray(probs)
    labels = np.asarray(labels).astype(bool)
    pos = probs[labels]
    neg = probs[~labels]
    wins = 0.0
    for p in pos:
        wins += np.sum(p > neg) + 0.5 * np.sum(p == neg)
    return wins / (len(pos) * len(neg))


def sweep_youden(probs, labels):
    """Exhaustive threshold sweep; ties resolved to the lowest threshold."""
    probs = np.asarray(probs)
    labels = np.asarray(labels).astype(bool)
    best_j, best_t = -np.inf, None
    for t in sorted(set(probs)):
        preds = probs >= t
        tpr = np.sum(preds & labels) / labels.sum()
        fpr = np.sum(preds & ~labels) / (~labels).sum()
        j = tpr - fpr
        if j > best_j + 1e-15 or (abs(j - best_j) <= 1e-15 and t < best_t):
            best_j, best_t = j, t
    return best_j, best_t


def test_confusion_identity():
    cm = confusion([1, 0, 1, 0], [1, 0, 1, 0])
    assert (cm.tp, cm.tn, cm.fp, cm.fn) == (2, 2, 0, 0)


def test_confusion_complement_swaps():
    labels = np.array([1, 0, 1, 1, 0])
    preds = np.array([1, 1, 0, 1, 0])
    cm = confusion(labels, preds)
    swapped = confusion(labels, 1 - preds)
    assert (swapped.tp, swapped.fn) == (cm.fn, cm.tp)
    assert (swapped.tn, swapped.fp) == (cm.fp, cm.tn)


def test_confusion_length_mismatch():
    with pytest.raises(ValueError):
        confusion([1, 0], [1])


def test_confusion_from_published_fractions():
    cm = ConfusionMatrix.from_fractions(0.43, 0.064, 0.11, 0.39, total=1000)
    assert (cm.tn, cm.fp, cm.fn, cm.tp) == (430, 64, 110, 390)


def test_metrics_reproduce_published_accuracy():
    # fractions .43/.064/.11/.39 must give 82.10% ~ 0.82 at table
    # precision, and F1 = 0.78/0.954
    cm = ConfusionMatrix.from_fractions(0.43, 0.064, 0.11, 0.39, total=1000)
    m = metrics(cm)
    assert round(m["accuracy"], 2) == 0.82
    assert m["f1"] == pytest.approx(0.78 / 0.954, abs=1e-12)
    assert abs(m["f1"] - 0.8176) < 5e-4


def test_metrics_all_correct():
    m = metrics(confusion([1, 0, 1], [1, 0, 1]))
    assert m["accuracy"] == 1.0 and m["f1"] == 1.0


def test_metrics_undefined_reported_as_none():
    m = metrics(confusion([0, 0, 0], [0, 0, 0]))
    assert m["precision"] is None
    assert m["recall"] is None
    assert m["f1"] is None


def test_metrics_empty_matrix_errors():
    with pytest.raises(DatasetError):
        metrics(ConfusionMatrix(0, 0, 0, 0))


def test_roc_perfect_separation():
    probs = np.array([0.9, 0.8, 0.2, 0.1])
    labels = np.array([1, 1, 0, 0])
    curve, thr = roc_and_threshold(probs, labels)
    assert curve.auc == 1.0
    preds = probs >= thr
    assert np.array_equal(preds, labels.astype(bool))


def test_roc_constant_scores_auc_half():
    curve, _ = roc_and_threshold(np.full(10, 0.5), np.tile([0, 1], 5))
    assert curve.auc == pytest.approx(0.5)


def test_roc_four_point_example():
    probs = np.array([0.1, 0.4, 0.35, 0.8])
    labels = np.array([0, 0, 1, 1])
    curve, thr = roc_and_threshold(probs, labels)
    assert curve.auc == pytest.approx(0.75)
    assert thr == pytest.approx(0.35)  # J ties at 0.8 and 0.35 -> lower wins
    _, oracle_thr = sweep_youden(probs, labels)
    assert thr == pytest.approx(oracle_thr)


def test_roc_single_class_rejected():
    with pytest.raises(DatasetError):
        roc_and_threshold([0.1, 0.9], [1, 1])


def test_roc_endpoints_and_monotonicity():
    rng = np.random.default_rng(0)
    for _ in range(20):
        n = int(rng.integers(5, 200))
        probs = np.round(rng.uniform(size=n), 2)  # rounded -> plenty of ties
        labels = rng.integers(0, 2, size=n)
        if labels.min() == labels.max():
            continue
        curve, _ = roc_and_threshold(probs, labels)
        assert curve.fpr[0] == 0.0 and curve.tpr[0] == 0.0
        assert curve.fpr[-1] == 1.0 and curve.tpr[-1] == 1.0
        assert np.all(np.diff(curve.fpr) >= 0)
        assert np.all(np.diff(curve.tpr) >= 0)


def test_auc_equals_mann_whitney():
    rng = np.random.default_rng(1)
    for _ in range(50):
        n = int(rng.integers(5, 150))
        probs = np.round(rng.uniform(size=n), 2)
        labels = rng.integers(0, 2, size=n)
        if labels.min() == labels.max():
            continue
        curve, _ = roc_and_threshold(probs, labels)
        assert abs(curve.auc - mann_whitney_auc(probs, labels)) < 1e-9


def test_youden_equals_exhaustive_sweep():
    rng = np.random.default_rng(2)
    for _ in range(50):
        n = int(rng.integers(5, 150))
        probs = np.round(rng.uniform(size=n), 2)
        labels = rng.integers(0, 2, size=n)
        if labels.min() == labels.max():
            continue
        _, thr = roc_and_threshold(probs, labels)
        _, oracle_thr = sweep_youden(probs, labels)
        assert thr == pytest.approx(oracle_thr, abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.floats(min_value=0, max_value=1, allow_nan=False),
                          st.integers(min_value=0, max_value=1)),
                min_size=4, max_size=100))
def test_metrics_of_self_confusion_all_ones(pairs):
    labels = np.array([l for _, l in pairs])
    if labels.min() == labels.max():
        return
    m = metrics(confusion(labels, labels))
    assert m["accuracy"] == 1.0 and m["f1"] == 1.0 and m["precision"] == 1.0
