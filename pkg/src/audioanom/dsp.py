"""Shared frequency-domain primitives: framing, windowing, DFT, spectrograms.

Transforms are restricted to power-of-two sizes; frames shorter than n_fft
are zero-padded. Log-power uses a 1e-10 floor so silence never yields -inf.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .audio_io import AudioBuffer
from .errors import NFftNotPowerOfTwo, SignalTooShort

DEFAULT_FRAME_LEN = 400   # 25 ms @ 16 kHz
DEFAULT_HOP = 160         # 10 ms @ 16 kHz
DEFAULT_N_FFT = 512

LOG_FLOOR = 1e-10

SCALE_MAGNITUDE = "magnitude"
SCALE_POWER = "power"
SCALE_LOG_POWER = "log-power"


@dataclass(frozen=True)
class FrameMatrix:
    """Windowed (or raw) analysis frames: shape (num_frames, frame_len)."""

    frames: np.ndarray
    hop: int
    frame_len: int
    sample_rate: int


@dataclass(frozen=True)
class Spectrogram:
    """Per-frame one-sided spectra: shape (num_frames, n_fft // 2 + 1)."""

    bins: np.ndarray
    n_fft: int
    hop: int
    sample_rate: int
    scale: str

    def bin_frequency(self, b: int) -> float:
        return b * self.sample_rate / self.n_fft


def hann_window(n: int) -> np.ndarray:
    """Periodic Hann taper: w[k] = 0.5 * (1 - cos(2 pi k / n))."""
    if n < 2:
        raise ValueError(f"window length must be >= 2, got {n}")
    k = np.arange(n)
    return 0.5 * (1.0 - np.cos(2.0 * np.pi * k / n))


def _check_n_fft(n_fft: int) -> None:
    if n_fft < 2 or (n_fft & (n_fft - 1)) != 0:
        raise NFftNotPowerOfTwo(f"n_fft must be a power of two >= 2, got {n_fft}")


def dft(frame: np.ndarray, n_fft: int) -> np.ndarray:
    """Full complex spectrum of a real frame, zero-padded to n_fft."""
    _check_n_fft(n_fft)
    frame = np.asarray(frame, dtype=np.float64)
    if len(frame) > n_fft:
        raise ValueError(f"frame length {len(frame)} exceeds n_fft {n_fft}")
    if len(frame) < n_fft:
        frame = np.concatenate([frame, np.zeros(n_fft - len(frame))])
    return np.fft.fft(frame)


def idft(spectrum: np.ndarray) -> np.ndarray:
    """Inverse of dft; imaginary residue from real input is discarded."""
    _check_n_fft(len(spectrum))
    return np.fft.ifft(spectrum).real


def frame_signal(
    buffer: AudioBuffer,
    frame_len: int = DEFAULT_FRAME_LEN,
    hop: int = DEFAULT_HOP,
    window: bool = True,
) -> FrameMatrix:
    """Slice a signal into fixed-stride frames, optionally Hann-windowed.

    Frame i covers samples [i*hop, i*hop + frame_len); the trailing partial
    frame is discarded. A signal shorter than one frame yields zero frames.
    """
    if frame_len < 2:
        raise ValueError(f"frame_len must be >= 2, got {frame_len}")
    if hop < 1:
        raise ValueError(f"hop must be >= 1, got {hop}")
    x = buffer.samples
    if len(x) < frame_len:
        frames = np.empty((0, frame_len))
    else:
        num = 1 + (len(x) - frame_len) // hop
        idx = np.arange(frame_len)[None, :] + hop * np.arange(num)[:, None]
        frames = x[idx]
        if window:
            frames = frames * hann_window(frame_len)[None, :]
    return FrameMatrix(frames, hop=hop, frame_len=frame_len,
                       sample_rate=buffer.sample_rate)


def require_frames(fm: FrameMatrix, context: str = "analysis") -> FrameMatrix:
    if fm.frames.shape[0] == 0:
        raise SignalTooShort(f"signal shorter than one {context} frame "
                             f"({fm.frame_len} samples)")
    return fm


def power_spectrogram(
    fm: FrameMatrix,
    n_fft: int = DEFAULT_N_FFT,
    scale: str = SCALE_POWER,
) -> Spectrogram:
    """One-sided spectrogram over bins 0 .. n_fft/2 in the requested scale."""
    _check_n_fft(n_fft)
    if fm.frame_len > n_fft:
        raise ValueError(f"frame_len {fm.frame_len} exceeds n_fft {n_fft}")
    if scale not in (SCALE_MAGNITUDE, SCALE_POWER, SCALE_LOG_POWER):
        raise ValueError(f"unknown scale {scale!r}")
    spec = np.fft.rfft(fm.frames, n=n_fft, axis=1)
    mag = np.abs(spec)
    if scale == SCALE_MAGNITUDE:
        bins = mag
    elif scale == SCALE_POWER:
        bins = mag ** 2
    else:
        bins = 10.0 * np.log10(mag ** 2 + LOG_FLOOR)
    return Spectrogram(bins, n_fft=n_fft, hop=fm.hop,
                       sample_rate=fm.sample_rate, scale=scale)
