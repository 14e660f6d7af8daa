"""Traditional feature extraction: MFCCs, spectral centroid, zero-crossing rate.

Per-frame values are aggregated to a fixed 30-feature clip vector
(MFCC_mean_1..13, MFCC_std_1..13, ZCR_mean/std, Centroid_mean/std) using
population standard deviation so single-frame clips stay well defined.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
from scipy.fft import dct

from .audio_io import AudioBuffer
from .dsp import (
    DEFAULT_FRAME_LEN,
    DEFAULT_HOP,
    DEFAULT_N_FFT,
    LOG_FLOOR,
    SCALE_POWER,
    frame_signal,
    power_spectrogram,
    require_frames,
)
from .errors import DegenerateFilter, FrameTooShort, SignalTooShort


@dataclass(frozen=True)
class MfccConfig:
    n_mels: int = 26
    n_coeffs: int = 13
    fmin: float = 0.0
    fmax: Optional[float] = None   # None -> sample_rate / 2
    pre_emphasis: float = 0.97
    frame_len: int = DEFAULT_FRAME_LEN
    hop: int = DEFAULT_HOP
    n_fft: int = DEFAULT_N_FFT

    def validate(self, sample_rate: int) -> None:
        fmax = self.fmax if self.fmax is not None else sample_rate / 2
        if not 1 <= self.n_coeffs <= self.n_mels:
            raise ValueError(
                f"need 1 <= n_coeffs <= n_mels, got {self.n_coeffs}/{self.n_mels}")
        if not 0 <= self.fmin < fmax <= sample_rate / 2:
            raise ValueError(
                f"need 0 <= fmin < fmax <= Nyquist, got [{self.fmin}, {fmax}]")


@dataclass(frozen=True)
class FeatureVector:
    names: tuple
    values: np.ndarray
    clip_id: str
    label: Optional[str] = None


@dataclass
class FeatureSet:
    vectors: list = field(default_factory=list)
    names: tuple = ()
    class_names: tuple = ()

    def matrix(self) -> np.ndarray:
        return np.array([v.values for v in self.vectors], dtype=np.float64)

    def labels(self) -> np.ndarray:
        """Labels as integer indices into class_names."""
        index = {c: i for i, c in enumerate(self.class_names)}
        return np.array([index[v.label] for v in self.vectors], dtype=np.intp)

    def subset(self, indices) -> "FeatureSet":
        return FeatureSet([self.vectors[i] for i in indices],
                          self.names, self.class_names)


class CentroidResult(NamedTuple):
    hz: float
    silent: bool


def pre_emphasis(buffer: AudioBuffer, coeff: float = 0.97) -> AudioBuffer:
    """First-order high-pass: y[n] = x[n] - coeff * x[n-1], y[0] = x[0]."""
    x = buffer.samples
    if len(x) == 0 or coeff == 0.0:
        return buffer
    y = np.concatenate([[x[0]], x[1:] - coeff * x[:-1]])
    return AudioBuffer(y, buffer.sample_rate)


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(config: MfccConfig, sample_rate: int) -> np.ndarray:
    """Triangular mel filters, peak amplitude 1, shape (n_mels, n_fft/2 + 1).

    Filter centers sit at n_mels points equally spaced on the mel scale
    between fmin and fmax (plus the two edge points).
    """
    config.validate(sample_rate)
    fmax = config.fmax if config.fmax is not None else sample_rate / 2
    n_bins = config.n_fft // 2 + 1

    mel_pts = np.linspace(hz_to_mel(config.fmin), hz_to_mel(fmax),
                          config.n_mels + 2)
    hz_pts = mel_to_hz(mel_pts)

    center_bins = np.floor(hz_pts[1:-1] * config.n_fft / sample_rate).astype(int)
    if len(np.unique(center_bins)) < config.n_mels:
        raise DegenerateFilter(
            f"{config.n_mels} mel filters collapse at n_fft={config.n_fft}, "
            f"sample_rate={sample_rate}")

    bin_freqs = np.arange(n_bins) * sample_rate / config.n_fft
    fb = np.zeros((config.n_mels, n_bins))
    for m in range(config.n_mels):
        lo, center, hi = hz_pts[m], hz_pts[m + 1], hz_pts[m + 2]
        rising = (bin_freqs - lo) / (center - lo)
        falling = (hi - bin_freqs) / (hi - center)
        fb[m] = np.maximum(0.0, np.minimum(rising, falling))
    return fb


def mfcc(buffer: AudioBuffer, config: MfccConfig = MfccConfig()) -> np.ndarray:
    """Frame-level MFCCs, shape (num_frames, n_coeffs).

    Chain: pre-emphasis, Hann framing, power spectrum, mel filterbank,
    log (1e-10 floor), orthonormal DCT-II, keep the first n_coeffs.
    """
    config.validate(buffer.sample_rate)
    emphasized = pre_emphasis(buffer, config.pre_emphasis)
    fm = frame_signal(emphasized, config.frame_len, config.hop, window=True)
    if fm.frames.shape[0] == 0:
        raise SignalTooShort(
            f"need at least {config.frame_len} samples, got {len(buffer)}")
    spec = power_spectrogram(fm, config.n_fft, SCALE_POWER)
    fb = mel_filterbank(config, buffer.sample_rate)
    energies = spec.bins @ fb.T
    log_e = np.log(energies + LOG_FLOOR)
    coeffs = dct(log_e, type=2, norm="ortho", axis=1)
    return coeffs[:, :config.n_coeffs]


def zero_crossing_rate(frame: np.ndarray) -> float:
    """Fraction of consecutive-sample sign changes.

    Exact zeros inherit the previous nonzero sign; leading zeros count as
    positive, so runs of silence never register as crossings.
    """
    frame = np.asarray(frame, dtype=np.float64)
    if len(frame) < 2:
        raise FrameTooShort(f"need >= 2 samples for ZCR, got {len(frame)}")
    signs = np.where(frame > 0, 1, np.where(frame < 0, -1, 0))
    # forward-fill zeros with the previous nonzero sign (positive at start)
    nz = np.where(signs != 0, np.arange(len(signs)), -1)
    last_nz = np.maximum.accumulate(nz)
    signs = np.where(last_nz >= 0, signs[np.maximum(last_nz, 0)], 1)
    changes = np.count_nonzero(signs[1:] != signs[:-1])
    return changes / (len(frame) - 1)


def spectral_centroid(power_bins: np.ndarray, sample_rate: int,
                      n_fft: int) -> CentroidResult:
    """Power-weighted mean frequency. All-zero spectra flag as silent."""
    power_bins = np.asarray(power_bins, dtype=np.float64)
    if len(power_bins) != n_fft // 2 + 1:
        raise ValueError(
            f"expected {n_fft // 2 + 1} bins, got {len(power_bins)}")
    total = power_bins.sum()
    if total == 0.0:
        return CentroidResult(0.0, silent=True)
    freqs = np.arange(len(power_bins)) * sample_rate / n_fft
    return CentroidResult(float((freqs * power_bins).sum() / total),
                          silent=False)


def feature_schema(n_coeffs: int = 13) -> tuple:
    names = [f"MFCC_mean_{i}" for i in range(1, n_coeffs + 1)]
    names += [f"MFCC_std_{i}" for i in range(1, n_coeffs + 1)]
    names += ["ZCR_mean", "ZCR_std", "Centroid_mean", "Centroid_std"]
    return tuple(names)


def extract_clip_features(
    segment: AudioBuffer,
    config: MfccConfig = MfccConfig(),
    clip_id: str = "",
    label: Optional[str] = None,
) -> FeatureVector:
    """Aggregate per-frame MFCC/ZCR/centroid to one named clip vector."""
    coeffs = mfcc(segment, config)

    raw = require_frames(
        frame_signal(segment, config.frame_len, config.hop, window=False))
    zcrs = np.array([zero_crossing_rate(fr) for fr in raw.frames])

    windowed = frame_signal(segment, config.frame_len, config.hop, window=True)
    spec = power_spectrogram(windowed, config.n_fft, SCALE_POWER)
    centroids = np.array([
        spectral_centroid(row, segment.sample_rate, config.n_fft).hz
        for row in spec.bins
    ])

    values = np.concatenate([
        coeffs.mean(axis=0),
        coeffs.std(axis=0),       # population std
        [zcrs.mean(), zcrs.std(),
         centroids.mean(), centroids.std()],
    ])
    return FeatureVector(feature_schema(config.n_coeffs), values,
                         clip_id=clip_id, label=label)


# --- FeatureSet CSV serialization ---

def featureset_to_csv(fs: FeatureSet) -> str:
    """CSV with header clip_id,label,<features>; full float precision."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["clip_id", "label", *fs.names])
    for v in fs.vectors:
        writer.writerow([v.clip_id, v.label if v.label is not None else "",
                         *[repr(float(x)) for x in v.values]])
    return out.getvalue()


def featureset_from_csv(text: str) -> FeatureSet:
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if header[:2] != ["clip_id", "label"]:
        raise ValueError("feature CSV must start with clip_id,label columns")
    names = tuple(header[2:])
    vectors = []
    seen_labels = []
    for row in reader:
        if not row:
            continue
        clip_id, label = row[0], row[1] or None
        values = np.array([float(x) for x in row[2:]], dtype=np.float64)
        if len(values) != len(names):
            raise ValueError(f"row for {clip_id!r} has {len(values)} values, "
                             f"expected {len(names)}")
        vectors.append(FeatureVector(names, values, clip_id=clip_id, label=label))
        if label is not None and label not in seen_labels:
            seen_labels.append(label)
    return FeatureSet(vectors, names, tuple(sorted(seen_labels)))


def save_featureset(fs: FeatureSet, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(featureset_to_csv(fs))


def load_featureset(path) -> FeatureSet:
    with open(path, "r", encoding="utf-8") as fh:
        return featureset_from_csv(fh.read())
