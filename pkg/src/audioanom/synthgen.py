"""Deterministic synthetic two-class corpus: "normal" vs "anomalous" speech
proxies.

Normal clips are stable harmonic tones (f0 in 110-220 Hz, 3 harmonics) in
mild white noise. Anomalous clips add a reflecting random walk on f0
(slur-like pitch instability), slow amplitude wobble (2-6 Hz), 6 dB extra
noise, and a -6 dB/octave spectral tilt on the harmonics.

These are licensing-clean stand-ins for dysarthric-speech recordings, not a
clinical claim. Per-clip RNG streams derive from (seed, clip index), so any
subset of the corpus regenerates identically.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass

import numpy as np

from .audio_io import AudioBuffer, write_wav


@dataclass(frozen=True)
class CorpusSpec:
    n_per_class: int = 100
    seed: int = 42
    sample_rate: int = 16000
    clip_s: float = 2.0
    snr_db: float = 20.0          # normal-class SNR; anomalous gets 6 dB less
    f0_min: float = 110.0
    f0_max: float = 220.0
    n_harmonics: int = 3
    jitter_sigma_hz: float = 0.3  # per-sample random-walk step on f0
    wobble_min_hz: float = 2.0
    wobble_max_hz: float = 6.0
    wobble_depth: float = 0.5
    lead_silence_s: float = 0.3   # noise-only lead for noise profiling

    def __post_init__(self):
        if self.n_per_class < 1:
            raise ValueError("n_per_class must be >= 1")
        if self.clip_s <= 0:
            raise ValueError("clip_s must be positive")


def _reflect(values: np.ndarray, lo: float, hi: float) -> np.ndarray:
    """Fold values into [lo, hi] by reflection at the edges."""
    span = hi - lo
    folded = np.mod(values - lo, 2 * span)
    return lo + np.where(folded <= span, folded, 2 * span - folded)


def _render_clip(spec: CorpusSpec, label: str,
                 rng: np.random.Generator) -> AudioBuffer:
    sr = spec.sample_rate
    n = int(round(spec.clip_s * sr))
    n_lead = int(round(spec.lead_silence_s * sr))
    t_len = n - n_lead

    f0_start = rng.uniform(spec.f0_min, spec.f0_max)
    if label == "anomalous":
        walk = np.cumsum(rng.normal(0.0, spec.jitter_sigma_hz, size=t_len))
        f0 = _reflect(f0_start + walk, spec.f0_min, spec.f0_max)
    else:
        f0 = np.full(t_len, f0_start)

    phase0 = rng.uniform(0.0, 2.0 * np.pi)
    phase = phase0 + 2.0 * np.pi * np.cumsum(f0) / sr
    tone = np.zeros(t_len)
    for h in range(1, spec.n_harmonics + 1):
        amp = 0.6 ** (h - 1)
        if label == "anomalous":
            amp /= h  # extra -6 dB/octave tilt
        tone += amp * np.sin(h * phase)

    if label == "anomalous":
        wobble_hz = rng.uniform(spec.wobble_min_hz, spec.wobble_max_hz)
        wobble_phase = rng.uniform(0.0, 2.0 * np.pi)
        t = np.arange(t_len) / sr
        tone *= 1.0 + spec.wobble_depth * np.sin(
            2.0 * np.pi * wobble_hz * t + wobble_phase)

    tone_rms = np.sqrt(np.mean(tone ** 2))
    snr_db = spec.snr_db - (6.0 if label == "anomalous" else 0.0)
    noise_rms = tone_rms / (10.0 ** (snr_db / 20.0))
    noise = rng.normal(0.0, noise_rms, size=n)

    x = noise.copy()
    x[n_lead:] += tone
    # keep everything inside [-0.95, 0.95] without losing determinism
    peak = np.max(np.abs(x))
    if peak > 0.9:
        x *= 0.9 / peak
    return AudioBuffer(x, sr)


def generate_corpus(spec: CorpusSpec, out_dir) -> list:
    """Write 2 * n_per_class WAVs plus manifest.csv; returns the manifest
    rows as (clip_id, path, label)."""
    os.makedirs(out_dir, exist_ok=True)
    rows = []
    labels = ["normal", "anomalous"]
    for i in range(2 * spec.n_per_class):
        label = labels[i % 2]
        clip_id = f"clip_{i:04d}_{label}"
        rng = np.random.default_rng([spec.seed, i])
        buf = _render_clip(spec, label, rng)
        path = os.path.join(out_dir, clip_id + ".wav")
        write_wav(buf, path)
        rows.append((clip_id, path, label))

    manifest = os.path.join(out_dir, "manifest.csv")
    write_manifest(rows, manifest)
    return rows


def write_manifest(rows, path) -> None:
    """Manifest CSV with paths stored relative to the manifest's directory,
    so identically-generated corpora are byte-identical wherever they live."""
    base = os.path.dirname(os.path.abspath(path))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["clip_id", "path", "label"])
        for clip_id, file_path, label in rows:
            writer.writerow([clip_id, os.path.relpath(file_path, base), label])


def load_manifest(path) -> list:
    """Read a manifest CSV; relative paths resolve against its directory."""
    base = os.path.dirname(os.path.abspath(path))
    with open(path, "r", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["clip_id", "path", "label"]:
            raise ValueError(f"unexpected manifest header {header}")
        return [(clip_id, os.path.join(base, file_path), label)
                for clip_id, file_path, label in (row for row in reader if row)]
