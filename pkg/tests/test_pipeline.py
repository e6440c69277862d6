import numpy as np
import pytest

from whispermine.features import FeatureMatrix, KIND_RASTA_PLP
from whispermine.pipeline import stack_frames, stack_sequences


def _utt(rows, labels):
    return (np.asarray(rows, dtype=float), np.asarray(labels, dtype=np.uint8))


def test_stack_frames_concatenates_in_order():
    a = _utt(np.ones((3, 2)), [1, 0, 1])
    b = _utt(np.zeros((2, 2)), [0, 0])
    X, y = stack_frames([a, b])
    assert X.shape == (5, 2)
    np.testing.assert_array_equal(y, [1, 0, 1, 0, 0])


def test_stack_sequences_left_pads_like_inference():
    rows = np.arange(6, dtype=float)[:, None]
    labels = np.array([0, 0, 1, 1, 0, 1], dtype=np.uint8)
    X, y = stack_sequences([(rows, labels)], seq_len=3, stride=1)
    assert X.shape == (6, 3, 1)
    np.testing.assert_array_equal(y, labels)
    # window for frame 0 is all-replicated frame 0
    np.testing.assert_array_equal(X[0][:, 0], [0, 0, 0])
    np.testing.assert_array_equal(X[1][:, 0], [0, 0, 1])
    np.testing.assert_array_equal(X[5][:, 0], [3, 4, 5])


def test_stack_sequences_stride():
    rows = np.arange(10, dtype=float)[:, None]
    labels = np.arange(10, dtype=np.uint8) % 2
    X, y = stack_sequences([(rows, labels)], seq_len=4, stride=3)
    np.testing.assert_array_equal(X[:, -1, 0], [0, 3, 6, 9])
    np.testing.assert_array_equal(y, labels[[0, 3, 6, 9]])


def test_stack_sequences_never_crosses_utterances():
    a = (np.zeros((5, 1)), np.zeros(5, dtype=np.uint8))
    b = (np.ones((5, 1)), np.ones(5, dtype=np.uint8))
    X, _ = stack_sequences([a, b], seq_len=4, stride=1)
    # every window is pure 0s or pure 1s
    for win in X:
        assert win.min() == win.max()
