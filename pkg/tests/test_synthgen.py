import numpy as np
import pytest

from audioanom.audio_io import AudioBuffer, read_wav
from audioanom.dsp import frame_signal
from audioanom.features import zero_crossing_rate
from audioanom.synthgen import CorpusSpec, generate_corpus, load_manifest


def small_spec(**kwargs):
    defaults = dict(n_per_class=5, seed=42, clip_s=1.0)
    defaults.update(kwargs)
    return CorpusSpec(**defaults)


def test_corpus_counts_and_manifest(tmp_path):
    rows = generate_corpus(small_spec(), tmp_path / "corpus")
    assert len(rows) == 10
    labels = [label for _, _, label in rows]
    assert labels.count("normal") == 5
    assert labels.count("anomalous") == 5
    manifest = load_manifest(tmp_path / "corpus" / "manifest.csv")
    assert [tuple(r) for r in manifest] == rows


def test_corpus_byte_identical_regeneration(tmp_path):
    rows1 = generate_corpus(small_spec(), tmp_path / "a")
    rows2 = generate_corpus(small_spec(), tmp_path / "b")
    for (_, p1, _), (_, p2, _) in zip(rows1, rows2):
        assert open(p1, "rb").read() == open(p2, "rb").read()


def test_corpus_different_seed_differs(tmp_path):
    rows1 = generate_corpus(small_spec(seed=1), tmp_path / "a")
    rows2 = generate_corpus(small_spec(seed=2), tmp_path / "b")
    assert open(rows1[0][1], "rb").read() != open(rows2[0][1], "rb").read()


def test_samples_within_bounds(tmp_path):
    rows = generate_corpus(small_spec(n_per_class=10), tmp_path / "corpus")
    for _, path, _ in rows:
        buf = read_wav(path)
        assert np.max(np.abs(buf.samples)) <= 0.95


def test_invalid_spec_rejected():
    with pytest.raises(ValueError):
        CorpusSpec(n_per_class=0)
    with pytest.raises(ValueError):
        CorpusSpec(clip_s=0.0)


def _frame_zcr_variance(buf, skip_s=0.3):
    # skip the noise-only lead: both classes share it, and its noise ZCR
    # would swamp the tonal jitter being measured
    tonal = AudioBuffer(buf.samples[int(skip_s * buf.sample_rate):],
                        buf.sample_rate)
    fm = frame_signal(tonal, 400, 160, window=False)
    zcrs = [zero_crossing_rate(fr) for fr in fm.frames]
    return np.var(zcrs)


def test_anomalous_class_has_more_pitch_instability(tmp_path):
    # f0 jitter shows up as higher frame-to-frame zero-crossing variance
    rows = generate_corpus(small_spec(n_per_class=20, clip_s=2.0),
                           tmp_path / "corpus")
    by_label = {"normal": [], "anomalous": []}
    for _, path, label in rows:
        by_label[label].append(_frame_zcr_variance(read_wav(path)))
    assert np.mean(by_label["anomalous"]) > np.mean(by_label["normal"])
