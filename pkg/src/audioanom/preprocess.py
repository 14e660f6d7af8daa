"""Preprocessing pipeline: hybrid noise reduction, normalization, segmentation.

Noise reduction runs spectral subtraction first (stationary noise), then
optional NLMS cancellation when a reference channel exists; without a
reference the adaptive stage is skipped, since NLMS is ill-posed without one.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .audio_io import AudioBuffer
from .dsp import hann_window
from .errors import LengthMismatch, ProfileMismatch, TooShortForProfile

DEFAULT_ALPHA = 2.0
DEFAULT_BETA = 0.01
DEFAULT_LEAD_MS = 250.0
DEFAULT_MU = 0.5
DEFAULT_TAPS = 32
DEFAULT_SEG_LEN_S = 1.0
NLMS_EPS = 1e-8

PAD_ZERO_LAST = "zero-pad-last"
PAD_DROP_LAST = "drop-last"


@dataclass(frozen=True)
class NoiseProfile:
    """Mean magnitude spectrum of the leading noise-only window."""

    mean_magnitude: np.ndarray   # (n_fft // 2 + 1,)
    n_fft: int
    source_frames: int


@dataclass(frozen=True)
class AdaptiveFilterState:
    weights: np.ndarray
    mu: float
    taps: int
    eps: float


class NormalizeResult(NamedTuple):
    buffer: AudioBuffer
    silent: bool


@dataclass(frozen=True)
class SegmentSet:
    segments: list
    seg_len: int
    pad_policy: str


def _stft_frames(x: np.ndarray, n_fft: int):
    """Hann-analysis frames of length n_fft at hop n_fft/2, half-frame padded.

    The half-frame zero pad at both ends puts every original sample in the
    COLA-exact interior (periodic Hann at 50% overlap sums to 1), so
    unmodified frames overlap-add back to the input exactly.
    """
    hop = n_fft // 2
    padded = np.concatenate([np.zeros(hop), x, np.zeros(n_fft)])
    num = 1 + (len(padded) - n_fft) // hop
    idx = np.arange(n_fft)[None, :] + hop * np.arange(num)[:, None]
    return padded[idx] * hann_window(n_fft)[None, :], hop


def _overlap_add(frames: np.ndarray, hop: int, out_len: int) -> np.ndarray:
    n_fft = frames.shape[1]
    acc = np.zeros(hop * (len(frames) - 1) + n_fft)
    for i, fr in enumerate(frames):
        acc[i * hop:i * hop + n_fft] += fr
    # drop the front half-frame pad, trim/extend to the input length
    out = acc[hop:hop + out_len]
    if len(out) < out_len:
        out = np.concatenate([out, np.zeros(out_len - len(out))])
    return out


def estimate_noise_profile(
    buffer: AudioBuffer,
    lead_ms: float = DEFAULT_LEAD_MS,
    n_fft: int = 512,
) -> NoiseProfile:
    """Mean per-bin magnitude over all full frames in the leading window."""
    lead = int(round(lead_ms / 1000.0 * buffer.sample_rate))
    hop = n_fft // 2
    if lead < n_fft or len(buffer) < n_fft:
        raise TooShortForProfile(
            f"need at least {n_fft} samples of leading noise, "
            f"got {min(lead, len(buffer))}")
    x = buffer.samples[:lead]
    num = 1 + (len(x) - n_fft) // hop
    idx = np.arange(n_fft)[None, :] + hop * np.arange(num)[:, None]
    frames = x[idx] * hann_window(n_fft)[None, :]
    mags = np.abs(np.fft.rfft(frames, axis=1))
    return NoiseProfile(mags.mean(axis=0), n_fft=n_fft, source_frames=num)


def spectral_subtract(
    buffer: AudioBuffer,
    profile: NoiseProfile,
    alpha: float = DEFAULT_ALPHA,
    beta: float = DEFAULT_BETA,
    n_fft: int = 512,
) -> AudioBuffer:
    """Per-frame magnitude subtraction with over-subtraction and floor.

    M'[k] = max(M[k] - alpha * N[k], beta * M[k]); phase is preserved and
    frames are resynthesized by inverse transform with overlap-add.
    """
    if profile.n_fft != n_fft:
        raise ProfileMismatch(
            f"profile n_fft {profile.n_fft} != configured n_fft {n_fft}")
    if alpha < 0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")
    if not 0.0 <= beta <= 1.0:
        raise ValueError(f"beta must be in [0, 1], got {beta}")
    frames, hop = _stft_frames(buffer.samples, n_fft)
    spec = np.fft.rfft(frames, axis=1)
    mag = np.abs(spec)
    phase = np.exp(1j * np.angle(spec))
    new_mag = np.maximum(mag - alpha * profile.mean_magnitude[None, :],
                         beta * mag)
    out_frames = np.fft.irfft(new_mag * phase, n=n_fft, axis=1)
    out = _overlap_add(out_frames, hop, len(buffer))
    return AudioBuffer(out, buffer.sample_rate)


def nlms_cancel(
    primary: AudioBuffer,
    reference: AudioBuffer,
    mu: float = DEFAULT_MU,
    taps: int = DEFAULT_TAPS,
):
    """Normalized LMS noise cancellation against a reference channel.

    Returns (cleaned error signal, final filter state). Weights start at
    zero; the update is mu / (eps + ||r_window||^2) * e[n] * r_window.
    """
    if len(primary) != len(reference):
        raise LengthMismatch(
            f"primary has {len(primary)} samples, reference {len(reference)}")
    if primary.sample_rate != reference.sample_rate:
        raise LengthMismatch("primary and reference sample rates differ")
    if not 0.0 < mu < 2.0:
        raise ValueError(f"mu must be in (0, 2), got {mu}")
    if taps < 1:
        raise ValueError(f"taps must be >= 1, got {taps}")

    d = primary.samples
    r = reference.samples
    n = len(d)
    w = np.zeros(taps)
    e = np.empty(n)
    # r_window[j] = r[n - j], newest sample first; zero history before n=0
    rpad = np.concatenate([np.zeros(taps - 1), r])
    for i in range(n):
        win = rpad[i:i + taps][::-1]
        y = w @ win
        e[i] = d[i] - y
        w = w + (mu / (NLMS_EPS + win @ win)) * e[i] * win
    state = AdaptiveFilterState(weights=w, mu=mu, taps=taps, eps=NLMS_EPS)
    return AudioBuffer(e, primary.sample_rate), state


def normalize(
    buffer: AudioBuffer,
    mode: str = "peak",
    target: float = 0.99,
) -> NormalizeResult:
    """Scale to a target peak or RMS level. Silence passes through, flagged."""
    if target <= 0:
        raise ValueError(f"target must be positive, got {target}")
    x = buffer.samples
    if mode == "peak":
        peak = np.max(np.abs(x)) if len(x) else 0.0
        if peak == 0.0:
            return NormalizeResult(buffer, silent=True)
        return NormalizeResult(AudioBuffer(x * (target / peak),
                                           buffer.sample_rate), silent=False)
    if mode == "rms":
        rms = float(np.sqrt(np.mean(x ** 2))) if len(x) else 0.0
        if rms == 0.0:
            return NormalizeResult(buffer, silent=True)
        scaled = np.clip(x * (target / rms), -1.0, 1.0)
        return NormalizeResult(AudioBuffer(scaled, buffer.sample_rate),
                               silent=False)
    raise ValueError(f"unknown normalization mode {mode!r}")


def segment(
    buffer: AudioBuffer,
    seg_len_s: float = DEFAULT_SEG_LEN_S,
    pad_policy: str = PAD_ZERO_LAST,
) -> SegmentSet:
    """Cut into consecutive non-overlapping fixed-length segments."""
    if seg_len_s <= 0:
        raise ValueError(f"seg_len_s must be positive, got {seg_len_s}")
    if pad_policy not in (PAD_ZERO_LAST, PAD_DROP_LAST):
        raise ValueError(f"unknown pad policy {pad_policy!r}")
    seg_len = int(round(seg_len_s * buffer.sample_rate))
    x = buffer.samples
    full = len(x) // seg_len
    segs = [AudioBuffer(x[i * seg_len:(i + 1) * seg_len], buffer.sample_rate)
            for i in range(full)]
    rem = len(x) - full * seg_len
    if rem > 0 and pad_policy == PAD_ZERO_LAST:
        tail = np.concatenate([x[full * seg_len:], np.zeros(seg_len - rem)])
        segs.append(AudioBuffer(tail, buffer.sample_rate))
    if len(x) == 0 and pad_policy == PAD_ZERO_LAST:
        segs.append(AudioBuffer(np.zeros(seg_len), buffer.sample_rate))
    return SegmentSet(segs, seg_len=seg_len, pad_policy=pad_policy)
