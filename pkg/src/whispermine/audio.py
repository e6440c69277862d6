"""Audio ingestion, resampling, framing and emission.

Every stage of the pipeline consumes :class:`AudioBuffer`: mono float64
samples with a sample rate. The canonical on-disk format is RIFF/WAVE,
16-bit PCM, little endian, mono.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import signal

from .errors import AudioFormatError, UnsupportedEncodingError

PCM_SCALE = 32768  # int16 full scale; load divides by it, write multiplies

_WAVE_FORMAT_PCM = 1
_WAVE_FORMAT_IEEE_FLOAT = 3


@dataclass
class AudioBuffer:
    """Mono audio: samples (float64, nominally in [-1, 1]) plus rate in Hz."""

    samples: np.ndarray
    sample_rate_hz: int

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1:
            raise ValueError("AudioBuffer samples must be 1-D mono")
        if self.sample_rate_hz <= 0:
            raise ValueError(f"sample_rate_hz must be positive, got {self.sample_rate_hz}")
        if self.samples.size and not np.all(np.isfinite(self.samples)):
            raise ValueError("AudioBuffer samples must be finite")

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate_hz


@dataclass
class FrameSequence:
    """Fixed-length analysis windows cut from one buffer.

    Frame i covers samples [i*hop, i*hop + window); a tail shorter than a
    full window is dropped, so every frame has the same length.
    """

    frames: np.ndarray  # (n_frames, window_len_samples)
    window_len_samples: int
    hop_samples: int
    origin_rate_hz: int

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def window_s(self) -> float:
        return self.window_len_samples / self.origin_rate_hz

    @property
    def hop_s(self) -> float:
        return self.hop_samples / self.origin_rate_hz


def _read_fmt_chunk(payload: bytes):
    if len(payload) < 16:
        raise AudioFormatError("fmt chunk too short")
    tag, channels, rate, _byte_rate, _block_align, bits = struct.unpack("<HHIIHH", payload[:16])
    return tag, channels, rate, bits


def load_wav(path) -> AudioBuffer:
    """Read a RIFF/WAVE file into a mono buffer.

    16-bit PCM and 32-bit IEEE float encodings are accepted; multi-channel
    audio is collapsed by an unweighted mean. Integer PCM is scaled by
    1/32768 into [-1, 1]; float payloads are clipped into [-1, 1].
    """
    path = Path(path)
    raw = path.read_bytes()  # missing file raises FileNotFoundError
    if len(raw) < 12 or raw[:4] != b"RIFF" or raw[8:12] != b"WAVE":
        raise AudioFormatError(f"{path}: not a RIFF/WAVE file")

    fmt = None
    data = None
    pos = 12
    while pos + 8 <= len(raw):
        cid = raw[pos:pos + 4]
        (size,) = struct.unpack("<I", raw[pos + 4:pos + 8])
        body = raw[pos + 8:pos + 8 + size]
        if len(body) < size:
            raise AudioFormatError(f"{path}: truncated '{cid.decode(errors='replace')}' chunk")
        if cid == b"fmt ":
            fmt = _read_fmt_chunk(body)
        elif cid == b"data":
            data = body
        pos += 8 + size + (size % 2)  # chunks are word-aligned

    if fmt is None:
        raise AudioFormatError(f"{path}: missing fmt chunk")
    if data is None:
        raise AudioFormatError(f"{path}: missing data chunk")
    tag, channels, rate, bits = fmt
    if channels < 1 or rate <= 0:
        raise AudioFormatError(f"{path}: invalid fmt fields (channels={channels}, rate={rate})")

    if tag == _WAVE_FORMAT_PCM and bits == 16:
        flat = np.frombuffer(data[:len(data) - len(data) % (2 * channels)], dtype="<i2")
        samples = flat.astype(np.float64) / PCM_SCALE
    elif tag == _WAVE_FORMAT_IEEE_FLOAT and bits == 32:
        flat = np.frombuffer(data[:len(data) - len(data) % (4 * channels)], dtype="<f4")
        samples = flat.astype(np.float64)
        if samples.size and not np.all(np.isfinite(samples)):
            raise AudioFormatError(f"{path}: non-finite float samples")
        samples = np.clip(samples, -1.0, 1.0)
    else:
        raise UnsupportedEncodingError(
            f"{path}: unsupported encoding (format tag {tag}, {bits}-bit); "
            "only 16-bit PCM and 32-bit float are read"
        )

    if channels > 1:
        samples = samples[:len(samples) - len(samples) % channels]
        samples = samples.reshape(-1, channels).mean(axis=1)
    return AudioBuffer(samples=samples, sample_rate_hz=int(rate))


def wav_bytes(buf: AudioBuffer) -> bytes:
    """Serialize to an in-memory 16-bit PCM mono RIFF/WAVE blob (clipping
    out-of-range values)."""
    x = np.clip(buf.samples, -1.0, 1.0)
    q = np.clip(np.rint(x * PCM_SCALE), -PCM_SCALE, PCM_SCALE - 1).astype("<i2")
    payload = q.tobytes()
    header = b"RIFF" + struct.pack("<I", 36 + len(payload)) + b"WAVE"
    header += b"fmt " + struct.pack(
        "<IHHIIHH", 16, _WAVE_FORMAT_PCM, 1, buf.sample_rate_hz,
        buf.sample_rate_hz * 2, 2, 16,
    )
    header += b"data" + struct.pack("<I", len(payload))
    return header + payload


def write_wav(buf: AudioBuffer, path) -> int:
    """Write 16-bit PCM mono. Returns the number of clipped samples.

    Values outside [-1, 1] are clipped before quantization; quantization is
    round(x * 32768) clamped to int16, which keeps the write->load
    round-trip error within 1/32768 per sample.
    """
    x = buf.samples
    n_clipped = int(np.count_nonzero((x > 1.0) | (x < -1.0)))
    Path(path).write_bytes(wav_bytes(buf))
    return n_clipped


def resample(buf: AudioBuffer, target_rate_hz: int) -> AudioBuffer:
    """Band-limited polyphase resampling (windowed sinc, Kaiser beta 8.6,
    64 taps per phase). Identity when rates match; output length is
    round(len * target / source).
    """
    if target_rate_hz <= 0:
        raise ValueError("target_rate_hz must be positive")
    src = buf.sample_rate_hz
    if target_rate_hz == src:
        return AudioBuffer(buf.samples.copy(), src)
    if len(buf.samples) == 0:
        return AudioBuffer(np.zeros(0), target_rate_hz)

    g = math.gcd(src, target_rate_hz)
    up, down = target_rate_hz // g, src // g
    n_taps = 64 * up
    k = np.arange(n_taps) - (n_taps - 1) / 2
    cutoff = min(1.0 / up, 1.0 / down)  # fraction of the upsampled Nyquist
    h = cutoff * np.sinc(cutoff * k) * np.kaiser(n_taps, 8.6)

    y = signal.resample_poly(buf.samples, up, down, window=h)
    out_len = int(round(len(buf.samples) * target_rate_hz / src))
    if len(y) < out_len:
        y = np.pad(y, (0, out_len - len(y)))
    return AudioBuffer(y[:out_len], target_rate_hz)


def frame_signal(buf: AudioBuffer, window_ms: float = 40.0, hop_ms: float = 20.0) -> FrameSequence:
    """Cut the buffer into full-length analysis windows.

    Frame count is floor((len - window)/hop) + 1 when len >= window, else 0.
    """
    if not window_ms >= hop_ms > 0:
        raise ValueError("need window_ms >= hop_ms > 0")
    rate = buf.sample_rate_hz
    window = int(round(window_ms * 1e-3 * rate))
    hop = int(round(hop_ms * 1e-3 * rate))
    n = len(buf.samples)
    if n < window:
        frames = np.zeros((0, window))
    else:
        count = (n - window) // hop + 1
        frames = np.lib.stride_tricks.sliding_window_view(buf.samples, window)[::hop][:count]
        frames = np.ascontiguousarray(frames)
    return FrameSequence(frames=frames, window_len_samples=window,
                         hop_samples=hop, origin_rate_hz=rate)
