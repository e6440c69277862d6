"""Frame-level acoustic features.

Two families:
  * 57-dim RASTA-PLP (19 LP coefficients + first/second order deltas) —
    the classifier input,
  * 20-dim MFCC and its pooled 40-dim snippet embedding — the labeller's
    similarity space.

Both use 40 ms windows with a 20 ms hop at 16 kHz.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .audio import AudioBuffer, FrameSequence, frame_signal
from .errors import FeatureError
from .linpred import levinson_durbin

FRAME_WINDOW_MS = 40.0
FRAME_HOP_MS = 20.0
LOG_FLOOR = 1e-10
PLP_ORDER = 19
RASTA_PLP_DIM = 3 * PLP_ORDER  # static + delta + delta-delta
COMPRESSION_POWER = 0.33
N_MEL_FILTERS = 26
N_MFCC = 20

KIND_RASTA_PLP = "rasta_plp_57"
KIND_MFCC_POOLED = "mfcc_pooled"
_KIND_TAGS = {KIND_RASTA_PLP: 1, KIND_MFCC_POOLED: 2}
_TAG_KINDS = {v: k for k, v in _KIND_TAGS.items()}

FEAT_MAGIC = b"FEAT"
FEAT_VERSION = 1

# RASTA band-pass on log band energies:
#   H(z) = 0.1 * (2 + z^-1 - z^-3 - 2 z^-4) / (1 - 0.98 z^-1)
RASTA_NUM = np.array([0.2, 0.1, 0.0, -0.1, -0.2])
RASTA_DEN = np.array([1.0, -0.98])


@dataclass
class FeatureMatrix:
    rows: np.ndarray  # (n_frames, dim)
    kind: str
    frame_hop_s: float
    frame_len_s: float

    def __post_init__(self):
        self.rows = np.atleast_2d(np.asarray(self.rows, dtype=np.float64))

    @property
    def n_frames(self) -> int:
        return self.rows.shape[0]

    @property
    def dim(self) -> int:
        return self.rows.shape[1]


@dataclass
class CriticalBandSpectrum:
    band_energies: np.ndarray  # (n_frames, n_bands), non-negative
    n_bands: int
    centers_hz: np.ndarray


def hz_to_bark(f):
    return 6.0 * np.arcsinh(np.asarray(f, dtype=np.float64) / 600.0)


def bark_to_hz(z):
    return 600.0 * np.sinh(np.asarray(z, dtype=np.float64) / 6.0)


def next_pow2(n: int) -> int:
    return 1 << (int(n) - 1).bit_length()


def bark_filterbank(sample_rate_hz: int, n_fft: int):
    """Critical-band masking curves on the rfft bin grid.

    Band centers are evenly spaced (nominally 1 Bark apart) from 0 to
    Bark(Nyquist) inclusive; each curve is trapezoidal in dB: flat within
    +-0.5 Bark of the center, then 10 dB/Bark below and 25 dB/Bark above.
    Returns (weights (n_bands, n_bins), centers_hz).
    """
    nyq = sample_rate_hz / 2.0
    nyq_bark = float(hz_to_bark(nyq))
    n_bands = int(np.ceil(nyq_bark)) + 1
    centers_bark = np.linspace(0.0, nyq_bark, n_bands)
    bin_bark = hz_to_bark(np.arange(n_fft // 2 + 1) * sample_rate_hz / n_fft)

    delta = bin_bark[None, :] - centers_bark[:, None]
    lo = delta + 0.5
    hi = -2.5 * (delta - 0.5)
    weights = 10.0 ** np.minimum(0.0, np.minimum(lo, hi))
    return weights, bark_to_hz(centers_bark)


def critical_band_spectrum(frames: FrameSequence) -> CriticalBandSpectrum:
    """Hamming window -> power spectrum -> critical-band integration."""
    if frames.n_frames == 0:
        raise FeatureError("no frames: buffer shorter than one analysis window")
    n_fft = next_pow2(frames.window_len_samples)
    window = np.hamming(frames.window_len_samples)
    spectra = np.abs(np.fft.rfft(frames.frames * window, n=n_fft, axis=1)) ** 2
    weights, centers_hz = bark_filterbank(frames.origin_rate_hz, n_fft)
    energies = spectra @ weights.T
    return CriticalBandSpectrum(band_energies=energies, n_bands=weights.shape[0],
                                centers_hz=centers_hz)


def rasta_filter(trajectories: np.ndarray) -> np.ndarray:
    """Band-pass each band's log-energy trajectory over time.

    Input shape (T,) or (T, n_bands); time runs along axis 0. The first
    four frames prime the filter (FIR part only, feedback starts at frame
    5); their outputs are replaced by a copy of frame 5. Inputs of four or
    fewer frames are returned unchanged.
    """
    from scipy.signal import lfilter

    x = np.asarray(trajectories, dtype=np.float64)
    flat = x.ndim == 1
    if flat:
        x = x[:, None]
    t = x.shape[0]
    if t <= 4:
        out = x.copy()
        return out[:, 0] if flat else out

    zi = np.zeros((len(RASTA_NUM) - 1, x.shape[1]))
    _, state = lfilter(RASTA_NUM, [1.0], x[:4], axis=0, zi=zi)
    tail, _ = lfilter(RASTA_NUM, RASTA_DEN, x[4:], axis=0, zi=state)
    out = np.empty_like(x)
    out[:4] = tail[0]
    out[4:] = tail
    return out[:, 0] if flat else out


def equal_loudness_weights(centers_hz: np.ndarray) -> np.ndarray:
    """Hearing-sensitivity weighting evaluated at the band centers."""
    fsq = np.asarray(centers_hz, dtype=np.float64) ** 2
    return (fsq / (fsq + 1.6e5)) ** 2 * ((fsq + 1.44e6) / (fsq + 9.61e6))


def _auditory_to_autocorr(spectrum: np.ndarray, order: int) -> np.ndarray:
    """Treat the per-frame auditory spectrum as half of a symmetric power
    spectrum and inverse-DFT it into autocorrelation lags 0..order."""
    sym = np.concatenate([spectrum, spectrum[:, -2:0:-1]], axis=1)
    r = np.fft.ifft(sym, axis=1).real
    return r[:, :order + 1]


def rasta_plp_features(buf: AudioBuffer) -> FeatureMatrix:
    """57-dim RASTA-PLP features: 19 LP coefficients per frame plus deltas.

    Pipeline: framing -> critical-band energies -> log (floored) -> RASTA
    band-pass -> exp -> equal-loudness weighting -> intensity-loudness
    compression -> IDFT autocorrelation -> order-19 Levinson-Durbin ->
    delta stacking. Frames whose band energies all sit at the log floor
    (digital silence) emit all-zero coefficient rows.
    """
    frames = frame_signal(buf, FRAME_WINDOW_MS, FRAME_HOP_MS)
    if frames.n_frames == 0:
        raise FeatureError("buffer shorter than one analysis window")
    cbs = critical_band_spectrum(frames)

    energies = cbs.band_energies
    silent = np.all(energies <= LOG_FLOOR, axis=1)
    log_e = np.log(np.maximum(energies, LOG_FLOOR))
    filtered = rasta_filter(log_e)
    aud = np.exp(filtered)
    aud *= equal_loudness_weights(cbs.centers_hz)[None, :]
    aud **= COMPRESSION_POWER
    # edge bands carry no equal-loudness information (weight -> 0 at DC);
    # copy the neighbouring band as in the canonical formulation
    aud[:, 0] = aud[:, 1]
    aud[:, -1] = aud[:, -2]

    static = np.zeros((frames.n_frames, PLP_ORDER))
    active = ~silent
    if np.any(active):
        r = _auditory_to_autocorr(aud[active], PLP_ORDER)
        a, _ = levinson_durbin(r, PLP_ORDER)
        static[active] = a

    mat = FeatureMatrix(rows=static, kind=KIND_RASTA_PLP,
                        frame_hop_s=frames.hop_s, frame_len_s=frames.window_s)
    return delta_append(mat)


def delta_append(static: FeatureMatrix) -> FeatureMatrix:
    """Append first and second order delta regressions (window +-2 frames,
    boundary frames replicated)."""
    def regress(x):
        pad = np.concatenate([x[:1], x[:1], x, x[-1:], x[-1:]], axis=0)
        # sum_k k * x[t+k] / sum_k k^2, k in -2..2
        return (pad[3:-1] - pad[1:-3] + 2.0 * (pad[4:] - pad[:-4])) / 10.0

    d1 = regress(static.rows)
    d2 = regress(d1)
    return FeatureMatrix(rows=np.concatenate([static.rows, d1, d2], axis=1),
                         kind=static.kind, frame_hop_s=static.frame_hop_s,
                         frame_len_s=static.frame_len_s)


def _mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def _mel_inv(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(sample_rate_hz: int, n_fft: int, n_filters: int = N_MEL_FILTERS):
    """Triangular mel filters spanning 0..Nyquist on the rfft bin grid."""
    edges = _mel_inv(np.linspace(0.0, _mel(sample_rate_hz / 2.0), n_filters + 2))
    bins = np.arange(n_fft // 2 + 1) * sample_rate_hz / n_fft
    lo, mid, hi = edges[:-2], edges[1:-1], edges[2:]
    up = (bins[None, :] - lo[:, None]) / (mid - lo)[:, None]
    down = (hi[:, None] - bins[None, :]) / (hi - mid)[:, None]
    return np.maximum(0.0, np.minimum(up, down))


def mfcc_features(buf: AudioBuffer) -> FeatureMatrix:
    """20 MFCCs per frame (26 mel bands, log, DCT-II, c1..c20; c0 dropped)."""
    from scipy.fft import dct

    frames = frame_signal(buf, FRAME_WINDOW_MS, FRAME_HOP_MS)
    if frames.n_frames == 0:
        raise FeatureError("buffer shorter than one analysis window")
    n_fft = next_pow2(frames.window_len_samples)
    window = np.hamming(frames.window_len_samples)
    spectra = np.abs(np.fft.rfft(frames.frames * window, n=n_fft, axis=1)) ** 2
    mel_e = spectra @ mel_filterbank(frames.origin_rate_hz, n_fft).T
    log_mel = np.log(np.maximum(mel_e, LOG_FLOOR))
    cep = dct(log_mel, type=2, norm="ortho", axis=1)
    return FeatureMatrix(rows=cep[:, 1:N_MFCC + 1], kind=KIND_MFCC_POOLED,
                         frame_hop_s=frames.hop_s, frame_len_s=frames.window_s)


def snippet_embed(features: FeatureMatrix) -> np.ndarray:
    """Pool a snippet's frames into one vector: per-column mean then
    per-column population standard deviation."""
    if features.n_frames < 1:
        raise FeatureError("snippet_embed needs at least one frame")
    return np.concatenate([features.rows.mean(axis=0), features.rows.std(axis=0)])


def save_features(mat: FeatureMatrix, path) -> None:
    header = struct.pack("<4sIBQId", FEAT_MAGIC, FEAT_VERSION, _KIND_TAGS[mat.kind],
                         mat.n_frames, mat.dim, mat.frame_hop_s)
    payload = mat.rows.astype("<f4").tobytes()
    Path(path).write_bytes(header + payload)


def load_features(path) -> FeatureMatrix:
    raw = Path(path).read_bytes()
    head_len = struct.calcsize("<4sIBQId")
    if len(raw) < head_len:
        raise FeatureError(f"{path}: truncated feature file")
    magic, version, tag, rows, cols, hop_s = struct.unpack("<4sIBQId", raw[:head_len])
    if magic != FEAT_MAGIC:
        raise FeatureError(f"{path}: bad magic {magic!r}")
    if version != FEAT_VERSION:
        raise FeatureError(f"{path}: unsupported version {version}")
    if tag not in _TAG_KINDS:
        raise FeatureError(f"{path}: unknown kind tag {tag}")
    expected = rows * cols * 4
    if len(raw) != head_len + expected:
        raise FeatureError(f"{path}: payload size mismatch")
    data = np.frombuffer(raw[head_len:], dtype="<f4").reshape(rows, cols)
    # frame length is not part of the format; assume the 40/20 ms convention
    return FeatureMatrix(rows=data.astype(np.float64), kind=_TAG_KINDS[tag],
                         frame_hop_s=hop_s, frame_len_s=2.0 * hop_s)
