import numpy as np
import pytest

from whispermine.errors import NumericalError
from whispermine.linpred import levinson_durbin, toeplitz_solve


def biased_autocorr(x, p):
    n = len(x)
    return np.array([np.dot(x[:n - k], x[k:]) / n for k in range(p + 1)])


def test_identity_autocorrelation():
    a, err = levinson_durbin(np.array([1.0, 0.0, 0.0]))
    np.testing.assert_array_equal(a, [0.0, 0.0])
    assert err == 1.0


def test_ar2_recovery():
    rng = np.random.default_rng(42)
    n = 100_000
    e = rng.normal(size=n)
    x = np.zeros(n)
    for i in range(2, n):
        x[i] = 0.75 * x[i - 1] - 0.5 * x[i - 2] + e[i]
    a, err = levinson_durbin(biased_autocorr(x, 2))
    assert abs(a[0] - 0.75) < 0.02
    assert abs(a[1] + 0.5) < 0.02
    assert err > 0


def test_white_noise_coefficients_vanish():
    rng = np.random.default_rng(7)
    x = rng.normal(size=100_000)
    a, _ = levinson_durbin(biased_autocorr(x, 19))
    assert np.max(np.abs(a)) <= 0.05


def test_matches_direct_toeplitz_solve():
    rng = np.random.default_rng(3)
    for _ in range(100):
        p = int(rng.integers(1, 24))
        x = rng.normal(size=4 * (p + 1) + 16)
        r = biased_autocorr(x, p)
        a, _ = levinson_durbin(r)
        direct = toeplitz_solve(r)
        denom = max(np.max(np.abs(direct)), 1e-12)
        assert np.max(np.abs(a - direct)) / denom < 1e-8


def test_batch_matches_single():
    rng = np.random.default_rng(9)
    rs = np.stack([biased_autocorr(rng.normal(size=200), 10) for _ in range(8)])
    a_batch, err_batch = levinson_durbin(rs)
    for i in range(8):
        a_i, err_i = levinson_durbin(rs[i])
        np.testing.assert_array_equal(a_batch[i], a_i)
        assert err_batch[i] == err_i


def test_rejects_nonpositive_r0():
    with pytest.raises(NumericalError):
        levinson_durbin(np.array([0.0, 0.1]))
    with pytest.raises(NumericalError):
        levinson_durbin(np.array([-1.0, 0.1]))


def test_rejects_singular_recursion():
    # |reflection| = 1.2 on the first step
    with pytest.raises(NumericalError):
        levinson_durbin(np.array([1.0, 1.2]))
