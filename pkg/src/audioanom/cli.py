"""Command-line interface.

Subcommands: synth, preprocess, extract, train, evaluate, pipeline, render.
Exit codes are uniform: 0 success, 1 runtime error (I/O, bad files),
2 configuration error (bad flags/config values). AUDIOANOM_CONFIG names a
default config file; flags override file values.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys

import numpy as np

from . import pipeline as pl
from .audio_io import read_wav, resample_linear
from .config import PipelineConfig
from .dsp import SCALE_POWER, frame_signal, power_spectrogram
from .errors import AudioAnomError, ConfigError, SchemaMismatch
from .evaluate import emit_report, stratified_split
from .features import load_featureset, save_featureset
from .models import load_model, save_model
from .synthgen import CorpusSpec, generate_corpus, load_manifest

CONFIG_ENV = "AUDIOANOM_CONFIG"

SPECTROGRAM_DB_MIN = -80.0
SPECTROGRAM_DB_MAX = 0.0


def _load_config(args) -> PipelineConfig:
    path = args.config or os.environ.get(CONFIG_ENV)
    cfg = PipelineConfig.load(path) if path else PipelineConfig()
    overrides = {}
    for f in dataclasses.fields(PipelineConfig):
        value = getattr(args, f"cfg_{f.name}", None)
        if value is not None:
            overrides[f.name] = value
    if overrides:
        cfg = PipelineConfig.from_dict({**cfg.to_dict(), **overrides})
    return cfg.validate()


def cmd_synth(args) -> int:
    cfg = _load_config(args)
    spec = CorpusSpec(n_per_class=args.n if args.n is not None else cfg.n_per_class,
                      seed=args.seed if args.seed is not None else cfg.seed,
                      sample_rate=cfg.sample_rate, clip_s=cfg.clip_s,
                      snr_db=cfg.snr_db, jitter_sigma_hz=cfg.jitter_sigma_hz)
    rows = generate_corpus(spec, args.out)
    print(f"wrote {len(rows)} clips to {args.out}")
    return 0


def cmd_preprocess(args) -> int:
    cfg = _load_config(args)
    rows = load_manifest(args.manifest)
    seg_rows = pl.preprocess_manifest(rows, cfg, args.out)
    manifest_path = os.path.join(args.out, "segments.csv")
    pl.write_segment_manifest(seg_rows, manifest_path)
    print(f"wrote {len(seg_rows)} segments to {args.out}")
    return 0


def cmd_extract(args) -> int:
    cfg = _load_config(args)
    rows = load_manifest(args.manifest)
    features = pl.extract_manifest(rows, cfg)
    save_featureset(features, args.out)
    print(f"wrote {len(features.vectors)} feature rows to {args.out}")
    return 0


def cmd_train(args) -> int:
    cfg = _load_config(args)
    train = load_featureset(args.features)
    models = pl.train_models(train, cfg)
    os.makedirs(args.out, exist_ok=True)
    for name, model in models.items():
        save_model(model, os.path.join(args.out, f"model_{name}.json"))
    print(f"wrote forest/svm/ensemble models to {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    cfg = _load_config(args)
    model = load_model(args.model)
    test = load_featureset(args.test)
    if tuple(test.names) != tuple(model.feature_names):
        for i, (a, b) in enumerate(zip(test.names, model.feature_names)):
            if a != b:
                raise ConfigError(f"test CSV column {i} is {a!r}, "
                                  f"model expects {b!r}")
        raise ConfigError(f"test CSV has {len(test.names)} feature columns, "
                          f"model expects {len(model.feature_names)}")
    report = pl.evaluate_model(model, test, cfg)
    emit_report(report, args.out)
    print(f"accuracy {report.accuracy:.4f} -> {args.out}")
    return 0


def cmd_pipeline(args) -> int:
    cfg = _load_config(args)
    paths = pl.run_pipeline(cfg, args.out)
    print(f"pipeline complete; reports in {args.out}")
    for key in sorted(paths):
        print(f"  {key}: {paths[key]}")
    return 0


def _write_pgm(path, pixels: np.ndarray) -> None:
    h, w = pixels.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(pixels.astype(np.uint8).tobytes())


def cmd_render(args) -> int:
    cfg = _load_config(args)
    buf = resample_linear(read_wav(args.clip), cfg.sample_rate)
    if args.kind == "waveform":
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write("time_s,amplitude\n")
            for i, x in enumerate(buf.samples):
                fh.write(f"{i / buf.sample_rate:.6f},{x:.8f}\n")
    elif args.kind == "spectrum":
        fm = frame_signal(buf, cfg.frame_len, cfg.hop, window=True)
        spec = power_spectrogram(fm, cfg.n_fft, SCALE_POWER)
        mean_power = spec.bins.mean(axis=0)
        power_db = 10.0 * np.log10(mean_power + 1e-10)
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write("freq_hz,power_db\n")
            for k, p in enumerate(power_db):
                fh.write(f"{k * cfg.sample_rate / cfg.n_fft:.4f},{p:.4f}\n")
    else:  # spectrogram
        fm = frame_signal(buf, cfg.frame_len, cfg.hop, window=True)
        spec = power_spectrogram(fm, cfg.n_fft, "log-power")
        db = np.clip(spec.bins, SPECTROGRAM_DB_MIN, SPECTROGRAM_DB_MAX)
        scaled = (db - SPECTROGRAM_DB_MIN) / (SPECTROGRAM_DB_MAX - SPECTROGRAM_DB_MIN)
        pixels = np.round(scaled * 255.0)
        # rows = frequency with bin 0 at the bottom; columns = time
        _write_pgm(args.out, pixels.T[::-1, :])
    print(f"wrote {args.kind} to {args.out}")
    return 0


def _add_config_flags(parser: argparse.ArgumentParser, exclude=()) -> None:
    parser.add_argument("--config", help="path to a JSON config file "
                        f"(default: ${CONFIG_ENV})")
    group = parser.add_argument_group("config overrides")
    for f in dataclasses.fields(PipelineConfig):
        if f.name == "version" or f.name in exclude:
            continue
        ftype = f.type.replace("Optional[", "").rstrip("]")
        caster = {"int": int, "float": float, "str": str}.get(ftype, str)
        group.add_argument(f"--{f.name.replace('_', '-')}", dest=f"cfg_{f.name}",
                           type=caster, default=None, metavar="V")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="audioanom",
        description="Audio anomaly detection pipeline: synthesize, "
                    "preprocess, featurize, train, evaluate, render.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate the synthetic corpus")
    p.add_argument("--n", type=int, help="clips per class")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    _add_config_flags(p, exclude=("seed", "n_per_class"))
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("preprocess", help="denoise, normalize, segment")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    _add_config_flags(p)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("extract", help="extract clip features to CSV")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    _add_config_flags(p)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("train", help="train forest, SVM, and ensemble")
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True)
    _add_config_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="evaluate a model on a feature CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--out", required=True)
    _add_config_flags(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("pipeline", help="run the whole chain end to end")
    p.add_argument("--out", required=True)
    _add_config_flags(p)
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("render", help="emit waveform/spectrum CSV or "
                                      "spectrogram PGM")
    p.add_argument("--clip", required=True)
    p.add_argument("--kind", required=True,
                   choices=["waveform", "spectrogram", "spectrum"])
    p.add_argument("--out", required=True)
    _add_config_flags(p)
    p.set_defaults(func=cmd_render)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, SchemaMismatch) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (AudioAnomError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
