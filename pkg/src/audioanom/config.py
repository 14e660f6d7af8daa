"""Flat, versioned pipeline configuration.

Every tunable from every stage lives here with its default; config files
are flat JSON key/value documents. Unknown keys are rejected and values
are validated against stage preconditions at load time, so a typo fails
before any audio is touched.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from typing import Optional

from .errors import ConfigError

CONFIG_FORMAT_VERSION = 1


@dataclass
class PipelineConfig:
    version: int = CONFIG_FORMAT_VERSION

    # audio / dsp
    sample_rate: int = 16000
    frame_len: int = 400
    hop: int = 160
    n_fft: int = 512

    # noise reduction
    alpha: float = 2.0
    beta: float = 0.01
    lead_ms: float = 250.0
    mu: float = 0.5
    taps: int = 32

    # normalization / segmentation
    normalize_mode: str = "peak"
    normalize_target: float = 0.99
    seg_len_s: float = 1.0
    pad_policy: str = "zero-pad-last"

    # features
    n_mels: int = 26
    n_coeffs: int = 13
    fmin: float = 0.0
    fmax: Optional[float] = None
    pre_emphasis: float = 0.97

    # models
    n_trees: int = 100
    mtry: Optional[int] = None     # None -> round(sqrt(n_features))
    max_depth: Optional[int] = None
    min_samples_leaf: int = 1
    svm_lambda: float = 1e-3
    svm_epochs: int = 50
    forest_weight: float = 0.5
    svm_weight: float = 0.5

    # evaluation / corpus
    test_frac: float = 0.3
    seed: int = 42
    n_per_class: int = 100
    clip_s: float = 2.0
    snr_db: float = 20.0
    jitter_sigma_hz: float = 0.3

    # execution (serial implementation; accepted for interface stability)
    jobs: int = 1

    def validate(self) -> "PipelineConfig":
        checks = [
            (self.version == CONFIG_FORMAT_VERSION,
             f"version must be {CONFIG_FORMAT_VERSION}"),
            (self.sample_rate > 0, "sample_rate must be positive"),
            (self.frame_len >= 2, "frame_len must be >= 2"),
            (self.hop >= 1, "hop must be >= 1"),
            (self.n_fft >= 2 and self.n_fft & (self.n_fft - 1) == 0,
             "n_fft must be a power of two"),
            (self.frame_len <= self.n_fft, "frame_len must be <= n_fft"),
            (self.alpha >= 0, "alpha must be >= 0"),
            (0 <= self.beta <= 1, "beta must be in [0, 1]"),
            (self.lead_ms > 0, "lead_ms must be positive"),
            (0 < self.mu < 2, "mu must be in (0, 2)"),
            (self.taps >= 1, "taps must be >= 1"),
            (self.normalize_mode in ("peak", "rms"),
             "normalize_mode must be peak or rms"),
            (self.normalize_target > 0, "normalize_target must be positive"),
            (self.seg_len_s > 0, "seg_len_s must be positive"),
            (self.pad_policy in ("zero-pad-last", "drop-last"),
             "pad_policy must be zero-pad-last or drop-last"),
            (1 <= self.n_coeffs <= self.n_mels,
             "need 1 <= n_coeffs <= n_mels"),
            (self.fmin >= 0, "fmin must be >= 0"),
            (0 <= self.pre_emphasis < 1, "pre_emphasis must be in [0, 1)"),
            (self.n_trees >= 1, "n_trees must be >= 1"),
            (self.mtry is None or self.mtry >= 1, "mtry must be >= 1"),
            (self.max_depth is None or self.max_depth >= 1,
             "max_depth must be >= 1"),
            (self.min_samples_leaf >= 1, "min_samples_leaf must be >= 1"),
            (self.svm_lambda > 0, "svm_lambda must be positive"),
            (self.svm_epochs >= 0, "svm_epochs must be >= 0"),
            (self.forest_weight >= 0 and self.svm_weight >= 0
             and self.forest_weight + self.svm_weight > 0,
             "ensemble weights must be non-negative and not all zero"),
            (0 < self.test_frac < 1, "test_frac must be in (0, 1)"),
            (self.n_per_class >= 1, "n_per_class must be >= 1"),
            (self.clip_s > 0, "clip_s must be positive"),
            (self.jitter_sigma_hz >= 0, "jitter_sigma_hz must be >= 0"),
            (self.jobs >= 1, "jobs must be >= 1"),
        ]
        for ok, message in checks:
            if not ok:
                raise ConfigError(message)
        return self

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d).validate()

    @classmethod
    def load(cls, path) -> "PipelineConfig":
        with open(path, "r", encoding="utf-8") as fh:
            try:
                d = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
        if not isinstance(d, dict):
            raise ConfigError(f"{path}: config must be a JSON object")
        return cls.from_dict(d)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=1, sort_keys=True)
            fh.write("\n")
