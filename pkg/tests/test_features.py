import numpy as np
import pytest

from audioanom.audio_io import AudioBuffer
from audioanom.errors import DegenerateFilter, FrameTooShort, SignalTooShort
from audioanom.features import (
    MfccConfig,
    extract_clip_features,
    feature_schema,
    featureset_from_csv,
    featureset_to_csv,
    FeatureSet,
    hz_to_mel,
    mel_filterbank,
    mel_to_hz,
    mfcc,
    pre_emphasis,
    spectral_centroid,
    zero_crossing_rate,
)

from oracles import mel_points_hz, naive_mfcc

SR = 16000


# --- pre_emphasis ---

def test_pre_emphasis_zero_coeff_identity():
    buf = AudioBuffer([0.1, 0.2, 0.3], SR)
    assert pre_emphasis(buf, 0.0) is buf


def test_pre_emphasis_constant():
    out = pre_emphasis(AudioBuffer(np.ones(5), SR), 0.97)
    np.testing.assert_allclose(out.samples, [1.0, 0.03, 0.03, 0.03, 0.03])


def test_pre_emphasis_alternating():
    out = pre_emphasis(AudioBuffer([1, -1, 1, -1], SR), 0.97)
    np.testing.assert_allclose(out.samples, [1.0, -1.97, 1.97, -1.97])


# --- mel scale ---

def test_mel_of_zero():
    assert hz_to_mel(0.0) == 0.0


def test_mel_of_700():
    assert hz_to_mel(700.0) == pytest.approx(2595.0 * np.log10(2.0))


def test_mel_inverse_composition():
    for f in (100.0, 1000.0, 4000.0):
        assert mel_to_hz(hz_to_mel(f)) == pytest.approx(f, rel=1e-9)


# --- mel_filterbank ---

def test_filterbank_rows_nonnegative_unimodal():
    fb = mel_filterbank(MfccConfig(), SR)
    assert fb.shape == (26, 257)
    assert np.all(fb >= 0)
    for row in fb:
        support = np.nonzero(row)[0]
        assert len(support) > 0
        diffs = np.diff(row[support[0]:support[-1] + 1])
        # rises then falls: once a difference goes negative it stays negative
        signs = np.sign(diffs)
        if len(signs):
            first_fall = np.argmax(signs < 0) if np.any(signs < 0) else len(signs)
            assert np.all(signs[:first_fall] >= 0)
            assert np.all(signs[first_fall:] <= 0)


def test_filterbank_interior_overlap_bounds():
    cfg = MfccConfig()
    fb = mel_filterbank(cfg, SR)
    pts = mel_points_hz(cfg.n_mels, 0.0, SR / 2)
    freqs = np.arange(257) * SR / cfg.n_fft
    interior = (freqs > pts[1]) & (freqs < pts[-2])
    sums = fb.sum(axis=0)[interior]
    assert np.all(sums > 0)
    assert np.all(sums <= 2.0 + 1e-12)


def test_filterbank_centers_match_independent_recomputation():
    cfg = MfccConfig()
    fb = mel_filterbank(cfg, SR)
    centers_hz = mel_points_hz(cfg.n_mels, 0.0, SR / 2)[1:-1]
    expected_bins = np.floor(centers_hz * cfg.n_fft / SR).astype(int)
    # the filter's peak bin is the last bin at or below its center frequency
    for m, center_bin in enumerate(expected_bins):
        peak_bin = np.argmax(fb[m])
        assert abs(peak_bin - center_bin) <= 1


def test_filterbank_degenerate_config_rejected():
    with pytest.raises(DegenerateFilter):
        mel_filterbank(MfccConfig(n_mels=26, n_coeffs=13, n_fft=64), SR)


# --- mfcc ---

def test_mfcc_silence_is_dc_only():
    buf = AudioBuffer(np.zeros(SR), SR)
    coeffs = mfcc(buf)
    expected_c1 = np.sqrt(26) * np.log(1e-10)
    np.testing.assert_allclose(coeffs[:, 0], expected_c1, rtol=1e-9)
    np.testing.assert_allclose(coeffs[:, 1:], 0.0, atol=1e-9)


def test_mfcc_shape_and_finiteness():
    rng = np.random.default_rng(21)
    buf = AudioBuffer(rng.normal(0, 0.1, size=SR), SR)
    coeffs = mfcc(buf)
    assert coeffs.shape == (1 + (SR - 400) // 160, 13)
    assert np.all(np.isfinite(coeffs))


def test_mfcc_too_short():
    with pytest.raises(SignalTooShort):
        mfcc(AudioBuffer(np.zeros(100), SR))


def test_mfcc_matches_naive_oracle():
    # short clips keep the O(n^2) oracle fast; full-length run lives in the
    # acceptance suite
    rng = np.random.default_rng(22)
    for _ in range(3):
        x = rng.uniform(-0.5, 0.5, size=1200)
        got = mfcc(AudioBuffer(x, SR))
        expected = naive_mfcc(x, SR)
        assert np.max(np.abs(got - expected)) < 1e-6


def test_mfcc_amplitude_shift_covariance():
    # gain changes only the DC cepstral coefficient
    rng = np.random.default_rng(23)
    x = rng.uniform(-0.4, 0.4, size=SR)
    base = mfcc(AudioBuffer(x, SR))
    for g in (0.5, 2.0):
        scaled = mfcc(AudioBuffer(g * x, SR))
        np.testing.assert_allclose(scaled[:, 1:], base[:, 1:], atol=1e-6)
        shift = scaled[:, 0] - base[:, 0]
        np.testing.assert_allclose(shift, shift[0], atol=1e-6)


# --- zero_crossing_rate ---

def test_zcr_constant():
    assert zero_crossing_rate(np.full(100, 0.5)) == 0.0


def test_zcr_alternating():
    assert zero_crossing_rate(np.array([1.0, -1.0, 1.0, -1.0])) == 1.0


def test_zcr_one_period_sine():
    # one full period of 1 kHz at 16 kHz, started mid-arc so the period
    # wraps: positive run, negative run, positive run again.
    # x[n] = sin(2 pi (n + 2) / 16): positive for n = 0..6, negative for
    # n = 7..14, positive at n = 15 -> 2 sign changes over 15 gaps.
    x = np.sin(2 * np.pi * (np.arange(16) + 2) / 16)
    assert zero_crossing_rate(x) == pytest.approx(2 / 15)


def test_zcr_zeros_inherit_previous_sign():
    assert zero_crossing_rate(np.array([0.0, 0.0, 1.0, 0.0, -1.0])) == \
        pytest.approx(1 / 4)


def test_zcr_scale_invariance():
    rng = np.random.default_rng(24)
    x = rng.normal(size=400)
    assert zero_crossing_rate(3.7 * x) == zero_crossing_rate(x)


def test_zcr_too_short():
    with pytest.raises(FrameTooShort):
        zero_crossing_rate(np.array([1.0]))


# --- spectral_centroid ---

def test_centroid_single_bin():
    bins = np.zeros(257)
    bins[16] = 5.0
    result = spectral_centroid(bins, SR, 512)
    assert result.hz == pytest.approx(500.0)
    assert not result.silent


def test_centroid_silent():
    result = spectral_centroid(np.zeros(257), SR, 512)
    assert result.hz == 0.0
    assert result.silent


def test_centroid_flat_spectrum():
    result = spectral_centroid(np.ones(257), SR, 512)
    assert result.hz == pytest.approx(4000.0)


def test_centroid_scale_invariant_and_bounded():
    rng = np.random.default_rng(25)
    bins = rng.uniform(0, 1, size=257)
    a = spectral_centroid(bins, SR, 512)
    b = spectral_centroid(10.0 * bins, SR, 512)
    assert a.hz == pytest.approx(b.hz, rel=1e-12)
    assert 0 <= a.hz <= SR / 2


# --- extract_clip_features ---

def test_schema_is_30_named_features():
    names = feature_schema()
    assert len(names) == 30
    assert "MFCC_mean_12" in names
    assert "MFCC_mean_5" in names
    assert names[-4:] == ("ZCR_mean", "ZCR_std", "Centroid_mean",
                          "Centroid_std")


def test_single_frame_clip_has_zero_stds():
    rng = np.random.default_rng(26)
    buf = AudioBuffer(rng.normal(0, 0.1, size=400), SR)
    fv = extract_clip_features(buf)
    values = dict(zip(fv.names, fv.values))
    for name in fv.names:
        if name.endswith("_std") or "_std_" in name:
            assert values[name] == 0.0


def test_silence_clip_features():
    fv = extract_clip_features(AudioBuffer(np.zeros(SR), SR))
    values = dict(zip(fv.names, fv.values))
    for i in range(2, 14):
        assert values[f"MFCC_mean_{i}"] == pytest.approx(0.0, abs=1e-9)
    assert values["ZCR_mean"] == 0.0


def test_extraction_deterministic():
    rng = np.random.default_rng(27)
    x = rng.normal(0, 0.1, size=SR)
    a = extract_clip_features(AudioBuffer(x, SR))
    b = extract_clip_features(AudioBuffer(x.copy(), SR))
    np.testing.assert_array_equal(a.values, b.values)


# --- CSV round trip ---

def test_featureset_csv_round_trip():
    rng = np.random.default_rng(28)
    names = feature_schema()
    vectors = []
    from audioanom.features import FeatureVector
    for i in range(5):
        label = "normal" if i % 2 == 0 else "anomalous"
        vectors.append(FeatureVector(names, rng.normal(size=30),
                                     clip_id=f"clip{i}", label=label))
    fs = FeatureSet(vectors, names, ("anomalous", "normal"))
    text = featureset_to_csv(fs)
    back = featureset_from_csv(text)
    assert back.names == names
    assert back.class_names == ("anomalous", "normal")
    for original, parsed in zip(fs.vectors, back.vectors):
        assert parsed.clip_id == original.clip_id
        assert parsed.label == original.label
        np.testing.assert_array_equal(parsed.values, original.values)
