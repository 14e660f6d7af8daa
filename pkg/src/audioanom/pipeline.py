"""End-to-end wiring of the stages: preprocess clips into segments, extract
features, train the three models, evaluate, and run the whole chain from a
single config + seed. The CLI is a thin wrapper around these functions.
"""

from __future__ import annotations

import os

import numpy as np

from .audio_io import AudioBuffer, read_wav, resample_linear, write_wav
from .config import PipelineConfig
from .errors import TooShortForProfile
from .evaluate import (
    EvaluationReport,
    confusion_matrix,
    emit_report,
    metrics,
    stratified_split,
)
from .features import (
    FeatureSet,
    MfccConfig,
    extract_clip_features,
    load_featureset,
    save_featureset,
)
from .models import (
    EnsembleModel,
    TreeParams,
    feature_importance,
    predict_class,
    save_model,
    train_forest,
    train_svm,
)
from .preprocess import estimate_noise_profile, normalize, segment, spectral_subtract
from .synthgen import CorpusSpec, generate_corpus, load_manifest, write_manifest


def mfcc_config(cfg: PipelineConfig) -> MfccConfig:
    return MfccConfig(n_mels=cfg.n_mels, n_coeffs=cfg.n_coeffs,
                      fmin=cfg.fmin, fmax=cfg.fmax,
                      pre_emphasis=cfg.pre_emphasis,
                      frame_len=cfg.frame_len, hop=cfg.hop, n_fft=cfg.n_fft)


def preprocess_clip(buf: AudioBuffer, cfg: PipelineConfig):
    """Noise reduction -> normalization -> segmentation for one clip.

    Clips too short to estimate a noise profile skip spectral subtraction
    rather than failing: short inputs are degraded, not rejected.
    """
    buf = resample_linear(buf, cfg.sample_rate)
    try:
        profile = estimate_noise_profile(buf, cfg.lead_ms, cfg.n_fft)
        buf = spectral_subtract(buf, profile, cfg.alpha, cfg.beta, cfg.n_fft)
    except TooShortForProfile:
        pass
    buf = normalize(buf, cfg.normalize_mode, cfg.normalize_target).buffer
    return segment(buf, cfg.seg_len_s, cfg.pad_policy).segments


def preprocess_manifest(rows, cfg: PipelineConfig, out_dir) -> list:
    """Process every manifest clip; returns segment manifest rows sorted by
    (clip_id, segment index)."""
    os.makedirs(out_dir, exist_ok=True)
    seg_rows = []
    for clip_id, path, label in sorted(rows, key=lambda r: r[0]):
        segments = preprocess_clip(read_wav(path), cfg)
        for j, seg in enumerate(segments):
            seg_id = f"{clip_id}_seg{j:03d}"
            seg_path = os.path.join(out_dir, seg_id + ".wav")
            write_wav(seg, seg_path)
            seg_rows.append((seg_id, seg_path, label))
    return seg_rows


def write_segment_manifest(seg_rows, path) -> None:
    write_manifest(seg_rows, path)


def extract_manifest(rows, cfg: PipelineConfig) -> FeatureSet:
    """Feature vectors for every (segment) manifest row."""
    mcfg = mfcc_config(cfg)
    vectors = []
    labels = []
    for clip_id, path, label in rows:
        buf = resample_linear(read_wav(path), cfg.sample_rate)
        vectors.append(extract_clip_features(buf, mcfg, clip_id=clip_id,
                                             label=label))
        if label not in labels:
            labels.append(label)
    names = vectors[0].names if vectors else ()
    return FeatureSet(vectors, names, tuple(sorted(labels)))


def train_models(train: FeatureSet, cfg: PipelineConfig) -> dict:
    """Fit forest, SVM, and their soft-voting ensemble."""
    params = TreeParams(cfg.max_depth, cfg.min_samples_leaf)
    forest = train_forest(train, n_trees=cfg.n_trees, mtry=cfg.mtry,
                          params=params, seed=cfg.seed)
    svm = train_svm(train, lam=cfg.svm_lambda, epochs=cfg.svm_epochs,
                    seed=cfg.seed)
    ensemble = EnsembleModel([(forest, cfg.forest_weight),
                              (svm, cfg.svm_weight)])
    return {"forest": forest, "svm": svm, "ensemble": ensemble}


def _forest_of(model):
    from .models import RandomForest
    if isinstance(model, RandomForest):
        return model
    if isinstance(model, EnsembleModel):
        for member, _ in model.members:
            if isinstance(member, RandomForest):
                return member
    return None


def evaluate_model(model, test: FeatureSet,
                   cfg: PipelineConfig) -> EvaluationReport:
    y_true = test.labels()
    y_pred = [predict_class(model, v) for v in test.vectors]
    cm = confusion_matrix(y_true, y_pred, len(test.class_names),
                          test.class_names)
    forest = _forest_of(model)
    top10 = feature_importance(forest)[:10] if forest is not None else None
    return metrics(cm, importance_top10=top10, config_echo=cfg.to_dict(),
                   seed=cfg.seed)


def run_pipeline(cfg: PipelineConfig, out_dir) -> dict:
    """synth -> preprocess -> extract -> split -> train -> evaluate.

    Returns the paths of everything written. Deterministic for a fixed
    (config, seed): rerunning yields byte-identical files.
    """
    os.makedirs(out_dir, exist_ok=True)
    corpus_dir = os.path.join(out_dir, "corpus")
    seg_dir = os.path.join(out_dir, "segments")

    spec = CorpusSpec(n_per_class=cfg.n_per_class, seed=cfg.seed,
                      sample_rate=cfg.sample_rate, clip_s=cfg.clip_s,
                      snr_db=cfg.snr_db, jitter_sigma_hz=cfg.jitter_sigma_hz)
    rows = generate_corpus(spec, corpus_dir)

    seg_rows = preprocess_manifest(rows, cfg, seg_dir)
    seg_manifest = os.path.join(out_dir, "segments.csv")
    write_segment_manifest(seg_rows, seg_manifest)

    features = extract_manifest(seg_rows, cfg)
    features_csv = os.path.join(out_dir, "features.csv")
    save_featureset(features, features_csv)

    train, test = stratified_split(features, cfg.test_frac, cfg.seed)
    train_csv = os.path.join(out_dir, "train.csv")
    test_csv = os.path.join(out_dir, "test.csv")
    save_featureset(train, train_csv)
    save_featureset(test, test_csv)

    models = train_models(train, cfg)
    paths = {
        "corpus_dir": corpus_dir,
        "segment_manifest": seg_manifest,
        "features_csv": features_csv,
        "train_csv": train_csv,
        "test_csv": test_csv,
    }
    for name, model in models.items():
        model_path = os.path.join(out_dir, f"model_{name}.json")
        save_model(model, model_path)
        report = evaluate_model(model, test, cfg)
        report_path = os.path.join(out_dir, f"report_{name}.json")
        emit_report(report, report_path)
        paths[f"model_{name}"] = model_path
        paths[f"report_{name}"] = report_path
    return paths
