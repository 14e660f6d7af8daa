"""Classical classifiers built from scratch: CART tree, random forest with
Gini feature importance, L2-regularized linear SVM (stochastic subgradient),
and a weighted soft-voting ensemble.

All training is a pure function of (data, params, seed); per-tree RNG
streams make forest training reproducible regardless of evaluation order.
Models persist to a single self-describing JSON document (format_version 1).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import (
    EmptyClass,
    EmptyDataset,
    NotBinary,
    SchemaMismatch,
)
from .features import FeatureSet, FeatureVector

MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True)
class TreeParams:
    max_depth: Optional[int] = None
    min_samples_leaf: int = 1


def _gini(counts: np.ndarray) -> float:
    n = counts.sum()
    if n == 0:
        return 0.0
    p = counts / n
    return 1.0 - float((p * p).sum())


def _best_split_for_feature(x: np.ndarray, y: np.ndarray, k: int,
                            min_leaf: int):
    """Best (threshold, weighted child gini) for one feature, or None.

    Thresholds are midpoints of consecutive distinct sorted values; among
    equal-quality splits the lowest threshold wins (scan is ascending).
    """
    order = np.argsort(x, kind="stable")
    xs = x[order]
    ys = y[order]
    n = len(xs)

    onehot = np.zeros((n, k))
    onehot[np.arange(n), ys] = 1.0
    prefix = np.cumsum(onehot, axis=0)        # prefix[i] = counts of ys[:i+1]
    total = prefix[-1]

    # split after position i (left = first i+1 items) only where value changes
    boundary = np.nonzero(xs[1:] > xs[:-1])[0]
    if len(boundary) == 0:
        return None
    n_left = boundary + 1
    n_right = n - n_left
    ok = (n_left >= min_leaf) & (n_right >= min_leaf)
    if not ok.any():
        return None
    boundary = boundary[ok]
    n_left = n_left[ok]
    n_right = n_right[ok]

    left = prefix[boundary]
    right = total[None, :] - left
    gini_l = 1.0 - ((left / n_left[:, None]) ** 2).sum(axis=1)
    gini_r = 1.0 - ((right / n_right[:, None]) ** 2).sum(axis=1)
    weighted = (n_left * gini_l + n_right * gini_r) / n

    best = int(np.argmin(weighted))
    i = boundary[best]
    threshold = 0.5 * (xs[i] + xs[i + 1])
    return float(threshold), float(weighted[best])


class DecisionTree:
    """CART classifier stored as a flat node array.

    Internal nodes: {"feature", "threshold", "left", "right"};
    leaves: {"proba": [...]} with probabilities summing to 1.
    """

    def __init__(self, nodes: list, n_classes: int, params: TreeParams,
                 importances: Optional[np.ndarray] = None):
        self.nodes = nodes
        self.n_classes = n_classes
        self.params = params
        # unnormalized per-feature impurity decrease from training
        self.importances = importances

    def predict_proba_row(self, x: np.ndarray) -> np.ndarray:
        node = self.nodes[0]
        while "proba" not in node:
            if x[node["feature"]] <= node["threshold"]:
                node = self.nodes[node["left"]]
            else:
                node = self.nodes[node["right"]]
        return np.asarray(node["proba"])

    def predict_proba_matrix(self, X: np.ndarray) -> np.ndarray:
        return np.array([self.predict_proba_row(row) for row in X])

    @property
    def n_splits(self) -> int:
        return sum(1 for n in self.nodes if "proba" not in n)

    def to_dict(self) -> dict:
        return {
            "nodes": self.nodes,
            "n_classes": self.n_classes,
            "max_depth": self.params.max_depth,
            "min_samples_leaf": self.params.min_samples_leaf,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DecisionTree":
        return cls(d["nodes"], d["n_classes"],
                   TreeParams(d["max_depth"], d["min_samples_leaf"]))


def _build_tree(X: np.ndarray, y: np.ndarray, n_classes: int,
                params: TreeParams, rng: Optional[np.random.Generator],
                mtry: Optional[int]) -> DecisionTree:
    n_total, n_features = X.shape
    nodes: list = []
    importances = np.zeros(n_features)

    def grow(idx: np.ndarray, depth: int) -> int:
        counts = np.bincount(y[idx], minlength=n_classes).astype(np.float64)
        node_id = len(nodes)
        nodes.append(None)  # reserve slot so children get higher ids

        parent_gini = _gini(counts)
        can_split = (parent_gini > 0.0
                     and (params.max_depth is None or depth < params.max_depth)
                     and len(idx) >= 2 * params.min_samples_leaf)
        best = None
        if can_split:
            if mtry is not None and mtry < n_features:
                candidates = np.sort(rng.choice(n_features, size=mtry,
                                                replace=False))
            else:
                candidates = np.arange(n_features)
            for f in candidates:
                found = _best_split_for_feature(X[idx, f], y[idx], n_classes,
                                                params.min_samples_leaf)
                if found is None:
                    continue
                threshold, child_gini = found
                gain = parent_gini - child_gini
                # strict comparisons: earlier (lower) feature wins ties
                if gain > 1e-15 and (best is None or gain > best[0]):
                    best = (gain, int(f), threshold)

        if best is None:
            proba = counts / counts.sum()
            nodes[node_id] = {"proba": proba.tolist()}
            return node_id

        gain, feature, threshold = best
        importances[feature] += (len(idx) / n_total) * gain
        mask = X[idx, feature] <= threshold
        left = grow(idx[mask], depth + 1)
        right = grow(idx[~mask], depth + 1)
        nodes[node_id] = {"feature": feature, "threshold": threshold,
                          "left": left, "right": right}
        return node_id

    grow(np.arange(n_total), 0)
    return DecisionTree(nodes, n_classes, params, importances)


def train_tree(data: FeatureSet, params: TreeParams = TreeParams(),
               rng: Optional[np.random.Generator] = None,
               mtry: Optional[int] = None) -> DecisionTree:
    if not data.vectors:
        raise EmptyDataset("no training instances")
    X = data.matrix()
    y = data.labels()
    return _build_tree(X, y, len(data.class_names), params, rng, mtry)


class RandomForest:
    def __init__(self, trees: list, feature_names: tuple, class_names: tuple,
                 mtry: int, seed: int, importances: np.ndarray):
        self.trees = trees
        self.feature_names = tuple(feature_names)
        self.class_names = tuple(class_names)
        self.mtry = mtry
        self.seed = seed
        self.importances = importances

    @property
    def no_splits(self) -> bool:
        return all(t.n_splits == 0 for t in self.trees)

    def predict_proba_values(self, x: np.ndarray) -> np.ndarray:
        probs = np.array([t.predict_proba_row(x) for t in self.trees])
        return probs.mean(axis=0)

    def to_dict(self) -> dict:
        return {
            "format_version": MODEL_FORMAT_VERSION,
            "kind": "random_forest",
            "feature_names": list(self.feature_names),
            "class_names": list(self.class_names),
            "mtry": self.mtry,
            "seed": self.seed,
            "importances": self.importances.tolist(),
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RandomForest":
        return cls([DecisionTree.from_dict(t) for t in d["trees"]],
                   tuple(d["feature_names"]), tuple(d["class_names"]),
                   d["mtry"], d["seed"], np.asarray(d["importances"]))


def train_forest(data: FeatureSet, n_trees: int = 100,
                 mtry: Optional[int] = None,
                 params: TreeParams = TreeParams(),
                 seed: int = 0, bootstrap: bool = True) -> RandomForest:
    """Bagged CART forest with per-tree RNG streams derived from (seed, i).

    bootstrap=False is a test hook reducing n_trees=1, mtry=n_features to a
    plain train_tree run.
    """
    if not data.vectors:
        raise EmptyDataset("no training instances")
    X = data.matrix()
    y = data.labels()
    n, n_features = X.shape
    if mtry is None:
        mtry = max(1, int(round(math.sqrt(n_features))))
    if not 1 <= mtry <= n_features:
        raise ValueError(f"mtry must be in [1, {n_features}], got {mtry}")
    if n_trees < 1:
        raise ValueError(f"n_trees must be >= 1, got {n_trees}")

    trees = []
    total_importance = np.zeros(n_features)
    for i in range(n_trees):
        rng = np.random.default_rng([seed, i])
        idx = rng.integers(0, n, size=n) if bootstrap else np.arange(n)
        tree = _build_tree(X[idx], y[idx], len(data.class_names), params,
                           rng, mtry)
        trees.append(tree)
        total_importance += tree.importances

    s = total_importance.sum()
    importances = total_importance / s if s > 0 else total_importance
    return RandomForest(trees, data.names, data.class_names, mtry, seed,
                        importances)


def feature_importance(forest: RandomForest) -> list:
    """(name, importance) pairs, descending; ties broken by name order."""
    order = sorted(range(len(forest.feature_names)),
                   key=lambda i: (-forest.importances[i], i))
    return [(forest.feature_names[i], float(forest.importances[i]))
            for i in order]


class LinearSvm:
    def __init__(self, weights: np.ndarray, bias: float, mean: np.ndarray,
                 std: np.ndarray, feature_names: tuple, class_names: tuple,
                 lam: float, epochs: int, seed: int):
        self.weights = weights
        self.bias = bias
        self.mean = mean
        self.std = std
        self.feature_names = tuple(feature_names)
        self.class_names = tuple(class_names)
        self.lam = lam
        self.epochs = epochs
        self.seed = seed

    def decision_value(self, x: np.ndarray) -> float:
        z = (x - self.mean) / self.std
        return float(self.weights @ z + self.bias)

    def predict_proba_values(self, x: np.ndarray) -> np.ndarray:
        d = self.decision_value(x)
        # overflow-safe logistic
        if d >= 0:
            p1 = 1.0 / (1.0 + np.exp(-d))
        else:
            e = np.exp(d)
            p1 = e / (1.0 + e)
        return np.array([1.0 - p1, p1])

    def to_dict(self) -> dict:
        return {
            "format_version": MODEL_FORMAT_VERSION,
            "kind": "linear_svm",
            "feature_names": list(self.feature_names),
            "class_names": list(self.class_names),
            "weights": self.weights.tolist(),
            "bias": self.bias,
            "scaler_mean": self.mean.tolist(),
            "scaler_std": self.std.tolist(),
            "lambda": self.lam,
            "epochs": self.epochs,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LinearSvm":
        return cls(np.asarray(d["weights"]), d["bias"],
                   np.asarray(d["scaler_mean"]), np.asarray(d["scaler_std"]),
                   tuple(d["feature_names"]), tuple(d["class_names"]),
                   d["lambda"], d["epochs"], d["seed"])


def svm_objective(model: LinearSvm, X: np.ndarray, y_pm: np.ndarray) -> float:
    """Regularized hinge objective on standardized features."""
    Z = (X - model.mean) / model.std
    margins = y_pm * (Z @ model.weights + model.bias)
    hinge = np.maximum(0.0, 1.0 - margins).mean()
    return 0.5 * model.lam * float(model.weights @ model.weights) + hinge


def train_svm(data: FeatureSet, lam: float = 1e-3, epochs: int = 50,
              seed: int = 0) -> LinearSvm:
    """Stochastic subgradient descent on the hinge objective, step 1/(lam t).

    Binary only; labels map to -1/+1 by class order. Features are
    standardized by train-set mean/std (zero-variance features get std 1).
    """
    if not data.vectors:
        raise EmptyDataset("no training instances")
    if len(data.class_names) != 2:
        raise NotBinary(f"SVM needs exactly 2 classes, "
                        f"got {len(data.class_names)}")
    X = data.matrix()
    y = data.labels()
    for c in (0, 1):
        if not np.any(y == c):
            raise EmptyClass(f"class {data.class_names[c]!r} has no instances")

    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std[std == 0.0] = 1.0
    Z = (X - mean) / std
    y_pm = np.where(y == 1, 1.0, -1.0)

    n, n_features = Z.shape
    w = np.zeros(n_features)
    b = 0.0
    rng = np.random.default_rng(seed)
    t = 0
    for _ in range(epochs):
        for i in rng.permutation(n):
            t += 1
            eta = 1.0 / (lam * t)
            if y_pm[i] * (w @ Z[i] + b) < 1.0:
                w = (1.0 - eta * lam) * w + eta * y_pm[i] * Z[i]
                b = b + eta * y_pm[i]
            else:
                w = (1.0 - eta * lam) * w

    return LinearSvm(w, b, mean, std, data.names, data.class_names,
                     lam, epochs, seed)


@dataclass
class EnsembleModel:
    members: list                      # (model, weight) pairs
    class_names: tuple = ()
    feature_names: tuple = ()

    def __post_init__(self):
        if not self.members:
            raise ValueError("ensemble needs at least one member")
        total = sum(w for _, w in self.members)
        if total <= 0:
            raise ValueError("member weights must sum to a positive value")
        self.members = [(m, w / total) for m, w in self.members]
        if not self.class_names:
            self.class_names = self.members[0][0].class_names
        if not self.feature_names:
            self.feature_names = self.members[0][0].feature_names

    def predict_proba_values(self, x: np.ndarray) -> np.ndarray:
        out = np.zeros(len(self.class_names))
        for model, weight in self.members:
            out += weight * model.predict_proba_values(x)
        return out

    def to_dict(self) -> dict:
        return {
            "format_version": MODEL_FORMAT_VERSION,
            "kind": "ensemble",
            "feature_names": list(self.feature_names),
            "class_names": list(self.class_names),
            "members": [{"weight": w, "model": m.to_dict()}
                        for m, w in self.members],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EnsembleModel":
        members = [(model_from_dict(m["model"]), m["weight"])
                   for m in d["members"]]
        return cls(members, tuple(d["class_names"]), tuple(d["feature_names"]))


def _check_schema(model, x: FeatureVector) -> None:
    if tuple(x.names) != tuple(model.feature_names):
        for i, (a, b) in enumerate(zip(x.names, model.feature_names)):
            if a != b:
                raise SchemaMismatch(
                    f"feature {i} is {a!r}, model expects {b!r}")
        raise SchemaMismatch(
            f"vector has {len(x.names)} features, model expects "
            f"{len(model.feature_names)}")


def predict_proba(model, x: FeatureVector) -> np.ndarray:
    """Class-probability vector for any trained model, schema-checked."""
    _check_schema(model, x)
    return model.predict_proba_values(x.values)


def soft_vote(ensemble: EnsembleModel, x: FeatureVector):
    """Weighted-average probabilities; argmax class, lowest index on ties."""
    proba = predict_proba(ensemble, x)
    return int(np.argmax(proba)), proba


def predict_class(model, x: FeatureVector) -> int:
    return int(np.argmax(predict_proba(model, x)))


# --- persistence ---

def model_from_dict(d: dict):
    kind = d.get("kind")
    if kind == "random_forest":
        return RandomForest.from_dict(d)
    if kind == "linear_svm":
        return LinearSvm.from_dict(d)
    if kind == "ensemble":
        return EnsembleModel.from_dict(d)
    raise ValueError(f"unknown model kind {kind!r}")


def save_model(model, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model.to_dict(), fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_model(path):
    with open(path, "r", encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))
