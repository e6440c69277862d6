import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from whispermine.audio import AudioBuffer, frame_signal, load_wav, resample, write_wav
from whispermine.errors import AudioFormatError, UnsupportedEncodingError


def _raw_wav(path, payload, fmt_tag=1, channels=1, rate=16000, bits=16):
    block = channels * bits // 8
    header = b"RIFF" + struct.pack("<I", 36 + len(payload)) + b"WAVE"
    header += b"fmt " + struct.pack("<IHHIIHH", 16, fmt_tag, channels, rate,
                                    rate * block, block, bits)
    header += b"data" + struct.pack("<I", len(payload))
    path.write_bytes(header + payload)


def test_load_pcm_scaling(tmp_path):
    p = tmp_path / "a.wav"
    _raw_wav(p, np.array([0, 16384, -32768], dtype="<i2").tobytes())
    buf = load_wav(p)
    np.testing.assert_array_equal(buf.samples, [0.0, 0.5, -1.0])
    assert buf.sample_rate_hz == 16000


def test_load_stereo_average_float(tmp_path):
    p = tmp_path / "st.wav"
    _raw_wav(p, np.array([1.0, 0.0], dtype="<f4").tobytes(),
             fmt_tag=3, channels=2, bits=32)
    buf = load_wav(p)
    np.testing.assert_array_equal(buf.samples, [0.5])


def test_load_stereo_average_pcm(tmp_path):
    p = tmp_path / "st16.wav"
    _raw_wav(p, np.array([16384, 0, -16384, -16384], dtype="<i2").tobytes(), channels=2)
    buf = load_wav(p)
    np.testing.assert_array_equal(buf.samples, [0.25, -0.5])


def test_load_one_second_header_arithmetic(tmp_path):
    p = tmp_path / "sec.wav"
    _raw_wav(p, np.zeros(16000, dtype="<i2").tobytes())
    buf = load_wav(p)
    assert len(buf.samples) == 16000
    assert buf.sample_rate_hz == 16000


def test_load_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_wav(tmp_path / "nope.wav")


def test_load_malformed_riff(tmp_path):
    p = tmp_path / "bad.wav"
    p.write_bytes(b"NOTARIFFFILE")
    with pytest.raises(AudioFormatError):
        load_wav(p)


def test_load_truncated_data_chunk(tmp_path):
    p = tmp_path / "trunc.wav"
    _raw_wav(p, np.zeros(100, dtype="<i2").tobytes())
    raw = p.read_bytes()
    p.write_bytes(raw[:-50])
    with pytest.raises(AudioFormatError):
        load_wav(p)


def test_load_unsupported_encoding(tmp_path):
    p = tmp_path / "alaw.wav"
    _raw_wav(p, b"\x00" * 64, fmt_tag=6, bits=8)  # a-law
    with pytest.raises(UnsupportedEncodingError):
        load_wav(p)


def test_write_round_trip_examples(tmp_path):
    p = tmp_path / "rt.wav"
    buf = AudioBuffer(np.array([0.0, 0.5, -1.0]), 16000)
    assert write_wav(buf, p) == 0
    back = load_wav(p)
    assert np.max(np.abs(back.samples - buf.samples)) <= 1 / 32768


def test_write_clips_and_counts(tmp_path):
    p = tmp_path / "clip.wav"
    n = write_wav(AudioBuffer(np.array([0.0, 1.5, -0.5]), 16000), p)
    assert n == 1
    back = load_wav(p)
    assert back.samples[1] == pytest.approx(1.0, abs=1 / 32768)


def test_write_empty(tmp_path):
    p = tmp_path / "empty.wav"
    write_wav(AudioBuffer(np.zeros(0), 16000), p)
    back = load_wav(p)
    assert len(back.samples) == 0


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(min_value=-1.0, max_value=1.0, allow_nan=False), min_size=1, max_size=200))
def test_round_trip_error_bound(tmp_path_factory, xs):
    p = tmp_path_factory.mktemp("wav") / "prop.wav"
    buf = AudioBuffer(np.array(xs), 8000)
    write_wav(buf, p)
    back = load_wav(p)
    assert np.max(np.abs(back.samples - buf.samples)) <= 1 / 32768


def test_resample_identity():
    rng = np.random.default_rng(0)
    buf = AudioBuffer(rng.uniform(-0.5, 0.5, 16000), 16000)
    out = resample(buf, 16000)
    np.testing.assert_array_equal(out.samples, buf.samples)


def test_resample_length():
    buf = AudioBuffer(np.zeros(48000), 48000)
    assert len(resample(buf, 16000).samples) == 16000
    buf2 = AudioBuffer(np.zeros(44100), 44100)
    assert len(resample(buf2, 16000).samples) == 16000


def test_resample_sine_spectrum():
    # 1 kHz sine at 48 kHz -> 16 kHz: dominant DFT bin at 1 kHz, sidebands
    # at least 60 dB down (analysed over an exact number of cycles, edges
    # trimmed to skip filter transients)
    t = np.arange(48000) / 48000
    buf = AudioBuffer(0.9 * np.sin(2 * np.pi * 1000 * t), 48000)
    out = resample(buf, 16000)
    seg = out.samples[4000:12000]
    spec = np.abs(np.fft.rfft(seg))
    peak = int(np.argmax(spec))
    assert peak * 16000 / len(seg) == pytest.approx(1000.0)
    others = np.delete(spec, peak)
    assert 20 * np.log10(spec[peak] / others.max()) >= 60


def test_framing_examples():
    buf = AudioBuffer(np.zeros(16000), 16000)
    fs = frame_signal(buf, 40, 20)
    assert fs.window_len_samples == 640
    assert fs.hop_samples == 320
    assert fs.n_frames == 49

    assert frame_signal(AudioBuffer(np.zeros(640), 16000), 40, 20).n_frames == 1
    assert frame_signal(AudioBuffer(np.zeros(639), 16000), 40, 20).n_frames == 0


def test_framing_covers_expected_samples():
    x = np.arange(2000) / 2000
    fs = frame_signal(AudioBuffer(x, 16000), 40, 20)
    for i in range(fs.n_frames):
        np.testing.assert_array_equal(fs.frames[i], x[i * 320:i * 320 + 640])


@settings(max_examples=200, deadline=None)
@given(
    n=st.integers(min_value=0, max_value=5000),
    window=st.integers(min_value=1, max_value=400),
    hop=st.integers(min_value=1, max_value=400),
)
def test_framing_count_formula(n, window, hop):
    if hop > window:
        hop = window
    rate = 16000
    buf = AudioBuffer(np.zeros(n), rate)
    fs = frame_signal(buf, window * 1000 / rate, hop * 1000 / rate)
    expected = (n - window) // hop + 1 if n >= window else 0
    assert fs.n_frames == expected
