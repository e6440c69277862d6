import numpy as np
import pytest

from whispermine.audio import AudioBuffer, load_wav
from whispermine.datasets import (
    CorpusManifest,
    LabelInterval,
    LabelTrack,
    append_silence,
    build_noisy_corpus,
    label_frames,
    mix_at_snr,
    recompute_snr_db,
    split_speakers,
)
from whispermine.errors import DatasetError
from whispermine.synth import make_synth_corpus

RATE = 16000


# ------------------------------------------------------------ mixing


def test_mix_equal_power_zero_db():
    speech = AudioBuffer(np.full(1000, 0.1), RATE)
    noise = AudioBuffer(np.tile([0.1, -0.1], 500), RATE)
    res = mix_at_snr(speech, noise, 0.0, seed=1)
    assert res.gain == pytest.approx(1.0, abs=1e-12)


def test_mix_equal_power_ten_db():
    speech = AudioBuffer(np.full(1000, 0.1), RATE)
    noise = AudioBuffer(np.tile([0.1, -0.1], 500), RATE)
    res = mix_at_snr(speech, noise, 10.0, seed=1)
    assert res.gain == pytest.approx(10 ** -0.5, abs=1e-12)


def test_mix_recomputed_snr_matches_target():
    rng = np.random.default_rng(3)
    speech = AudioBuffer(rng.uniform(-0.4, 0.4, 4000), RATE)
    noise = AudioBuffer(rng.uniform(-0.4, 0.4, 20000), RATE)
    for snr in (10.0, 5.0, 0.0, -3.7, 14.2):
        res = mix_at_snr(speech, noise, snr, seed=7)
        back = recompute_snr_db(speech, noise, res.gain, res.noise_offset)
        assert abs(back - snr) < 1e-9


def test_mix_rejects_silent_inputs():
    silent = AudioBuffer(np.zeros(100), RATE)
    loud = AudioBuffer(np.full(200, 0.1), RATE)
    with pytest.raises(DatasetError):
        mix_at_snr(silent, loud, 0.0)
    with pytest.raises(DatasetError):
        mix_at_snr(AudioBuffer(np.full(100, 0.1), RATE),
                   AudioBuffer(np.zeros(200), RATE), 0.0)


def test_mix_rejects_short_noise():
    with pytest.raises(DatasetError):
        mix_at_snr(AudioBuffer(np.full(300, 0.1), RATE),
                   AudioBuffer(np.full(100, 0.1), RATE), 0.0)


def test_mix_peak_normalization_recorded():
    speech = AudioBuffer(np.full(100, 0.9), RATE)
    noise = AudioBuffer(np.full(400, 0.9), RATE)
    res = mix_at_snr(speech, noise, 0.0, seed=0)  # 0.9 + 0.9 would clip
    assert res.peak_scale < 1.0
    assert np.max(np.abs(res.mixture.samples)) <= 1.0 + 1e-12


# ------------------------------------------------------------ silence


def test_append_silence_doubles_and_labels():
    buf = AudioBuffer(np.full(RATE, 0.1), RATE)
    out, track = append_silence(buf)
    assert len(out.samples) == 2 * RATE
    assert np.all(out.samples[RATE:] == 0.0)
    assert [(iv.start_s, iv.end_s, iv.label) for iv in track.intervals] == [
        (0.0, 1.0, "whisper"), (1.0, 2.0, "nonspeech")]


def test_append_silence_empty():
    out, track = append_silence(AudioBuffer(np.zeros(0), RATE))
    assert len(out.samples) == 0
    assert track.intervals == []


def test_append_silence_framing_half_positive():
    buf = AudioBuffer(np.full(RATE, 0.1), RATE)
    out, track = append_silence(buf)
    n_frames = (len(out.samples) - 640) // 320 + 1
    assert n_frames == 99
    labels = label_frames(track, n_frames)
    # half whisper, half nonspeech, within one boundary frame
    assert abs(labels.mean() - 0.5) <= 1.5 / n_frames


# ------------------------------------------------------------ splits


def _chains_like_table():
    from whispermine.datasets import UtteranceInfo

    utts = []
    for s in range(36):
        sex = "m" if s < 20 else "f"
        for u in range(37):
            utts.append(UtteranceInfo(id=f"s{s:02d}_u{u:02d}", path="x.wav",
                                      speaker=f"s{s:02d}", sex=sex))
    return utts


def test_split_speaker_counts_and_disjointness():
    utts = _chains_like_table()
    splits = split_speakers(utts, seed=5)
    by_speaker = {}
    for u in utts:
        if u.id in splits:
            by_speaker.setdefault(u.speaker, set()).add(splits[u.id])
    train_spk = {s for s, vals in by_speaker.items() if vals & {"train", "val"}}
    test_spk = {s for s, vals in by_speaker.items() if "test" in vals}
    assert len(train_spk) == 27
    assert len(test_spk) == 9
    assert not (train_spk & test_spk)


def test_split_val_rounding_per_speaker():
    utts = _chains_like_table()
    splits = split_speakers(utts, seed=5)
    per_speaker_val = {}
    for u in utts:
        if splits.get(u.id) == "val":
            per_speaker_val[u.speaker] = per_speaker_val.get(u.speaker, 0) + 1
    assert per_speaker_val  # training speakers exist
    assert all(v in (7, 8) for v in per_speaker_val.values())  # 20% of 37


def test_split_deterministic():
    utts = _chains_like_table()
    assert split_speakers(utts, seed=9) == split_speakers(utts, seed=9)


def test_split_insufficient_speakers():
    from whispermine.datasets import UtteranceInfo

    utts = [UtteranceInfo(id="a", path="x", speaker="a", sex="m")]
    with pytest.raises(DatasetError):
        split_speakers(utts)


# ------------------------------------------------------------ frame labels


def test_label_frames_tie_goes_positive():
    track = LabelTrack(intervals=[LabelInterval(0.0, 1.0, "whisper")])
    labels = label_frames(track, n_frames=50)
    # frame 49 spans [0.98, 1.02): exactly 50% overlap -> positive
    assert labels[49] == 1
    assert labels[:49].all()


def test_label_frames_empty_track():
    assert not label_frames(LabelTrack(), 20).any()


def test_label_frames_full_coverage():
    track = LabelTrack(intervals=[LabelInterval(0.0, 100.0, "whisper")])
    assert label_frames(track, 200).all()


def test_label_track_csv_round_trip(tmp_path):
    track = LabelTrack(intervals=[LabelInterval(0.0, 1.25, "whisper"),
                                  LabelInterval(1.25, 2.5, "nonspeech")])
    p = tmp_path / "t.csv"
    track.write_csv(p)
    back = LabelTrack.read_csv(p)
    assert [(iv.start_s, iv.end_s, iv.label) for iv in back.intervals] == \
           [(0.0, 1.25, "whisper"), (1.25, 2.5, "nonspeech")]


def test_label_track_rejects_overlap():
    with pytest.raises(ValueError):
        LabelTrack(intervals=[LabelInterval(0, 2, "whisper"),
                              LabelInterval(1, 3, "noise")])


# ------------------------------------------------------------ corpus build


@pytest.fixture(scope="module")
def tiny_sources(tmp_path_factory):
    root = tmp_path_factory.mktemp("tinysrc")
    utts, noises = make_synth_corpus(root, seed=3, n_speakers=4, utts_per_speaker=2,
                                     utt_duration_s=(1.0, 1.3), noise_duration_s=12.0,
                                     noise_types=("hiss", "taps"))
    splits = split_speakers(utts, seed=1, train_males=1, train_females=1,
                            test_males=1, test_females=1, val_fraction=0.5)
    for u in utts:
        u.split = splits.get(u.id)
    return utts, noises


def test_build_corpus_counts_and_snr(tiny_sources, tmp_path):
    utts, noises = tiny_sources
    manifest = build_noisy_corpus(utts, noises, tmp_path / "c", snrs=(10.0, 0.0),
                                  per_combo=3, seed=5, pools=("train", "val"))
    assert len(manifest.entries) == 2 * 2 * 3  # types x snrs x per_combo
    manifest.check_speaker_disjointness()
    for entry in manifest.entries:
        from whispermine.audio import resample

        speech, _ = append_silence(resample(load_wav(entry.clean_path), RATE))
        noise = resample(load_wav(entry.noise_path), RATE)
        back = recompute_snr_db(speech, noise, entry.gain, entry.noise_offset,
                                entry.power_span)
        assert abs(back - entry.snr_db) < 1e-6


def test_build_corpus_empty_when_per_combo_zero(tiny_sources, tmp_path):
    utts, noises = tiny_sources
    manifest = build_noisy_corpus(utts, noises, tmp_path / "c0", per_combo=0, seed=5)
    assert manifest.entries == []


def test_build_corpus_deterministic(tiny_sources, tmp_path):
    utts, noises = tiny_sources
    m1 = build_noisy_corpus(utts, noises, tmp_path / "d1", snrs=(5.0,),
                            per_combo=2, seed=8)
    m2 = build_noisy_corpus(utts, noises, tmp_path / "d2", snrs=(5.0,),
                            per_combo=2, seed=8)
    ids1 = [e.id for e in m1.entries]
    assert ids1 == [e.id for e in m2.entries]
    for e1, e2 in zip(m1.entries, m2.entries):
        assert (tmp_path / "d1" / "audio" / f"{e1.id}.wav").read_bytes() == \
               (tmp_path / "d2" / "audio" / f"{e2.id}.wav").read_bytes()
        assert (tmp_path / "d1" / "labels" / f"{e1.id}.csv").read_bytes() == \
               (tmp_path / "d2" / "labels" / f"{e2.id}.csv").read_bytes()
        assert e1.gain == e2.gain
    # manifests byte-identical apart from the directory they live in
    norm1 = (tmp_path / "d1" / "manifest.jsonl").read_text()
    norm2 = (tmp_path / "d2" / "manifest.jsonl").read_text()
    assert norm1.replace("d1", "dX") == norm2.replace("d2", "dX")


def test_build_corpus_insufficient_pool(tiny_sources, tmp_path):
    utts, noises = tiny_sources
    with pytest.raises(DatasetError):
        build_noisy_corpus(utts, noises, tmp_path / "cx", per_combo=500, seed=5)


def test_manifest_round_trip(tiny_sources, tmp_path):
    from pathlib import Path

    utts, noises = tiny_sources
    manifest = build_noisy_corpus(utts, noises, tmp_path / "rt", snrs=(5.0,),
                                  per_combo=2, seed=8)
    back = CorpusManifest.load(tmp_path / "rt" / "manifest.jsonl")
    assert [e.id for e in back.entries] == [e.id for e in manifest.entries]
    for e in back.entries:
        # relative manifest paths resolve against the manifest directory
        assert Path(e.mixture_path).is_absolute()
        assert Path(e.mixture_path).exists()
        assert Path(e.label_path).exists()
