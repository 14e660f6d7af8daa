import numpy as np
import pytest

from audioanom.errors import EmptyDataset, NotBinary, SchemaMismatch
from audioanom.features import FeatureSet, FeatureVector
from audioanom.models import (
    EnsembleModel,
    LinearSvm,
    TreeParams,
    feature_importance,
    model_from_dict,
    load_model,
    predict_class,
    predict_proba,
    save_model,
    soft_vote,
    svm_objective,
    train_forest,
    train_svm,
    train_tree,
)


def make_set(X, labels, class_names=("A", "B"), feature_names=None):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[0] == 1 and len(labels) > 1:
        X = X.T
    if feature_names is None:
        feature_names = tuple(f"f{i}" for i in range(X.shape[1]))
    vectors = [FeatureVector(feature_names, X[i], clip_id=f"c{i}",
                             label=labels[i]) for i in range(len(labels))]
    return FeatureSet(vectors, feature_names, tuple(class_names))


# --- train_tree ---

def test_tree_pure_node_is_single_leaf():
    data = make_set([[0.0], [1.0], [2.0]], ["A", "A", "A"])
    tree = train_tree(data)
    assert len(tree.nodes) == 1
    np.testing.assert_array_equal(tree.nodes[0]["proba"], [1.0, 0.0])


def test_tree_single_split_midpoint():
    # enumerating all candidate splits by hand: midpoints 0.5, 1.5, 2.5;
    # only 1.5 yields two pure children (gain 0.5), so it must be chosen
    data = make_set([[0.0], [1.0], [2.0], [3.0]], ["A", "A", "B", "B"])
    tree = train_tree(data)
    root = tree.nodes[0]
    assert root["feature"] == 0
    assert root["threshold"] == pytest.approx(1.5)
    for x, label in [(0.0, 0), (1.0, 0), (2.0, 1), (3.0, 1)]:
        assert np.argmax(tree.predict_proba_row(np.array([x]))) == label


def test_tree_conflicting_labels_leaf_frequencies():
    data = make_set([[1.0], [1.0], [1.0], [1.0]], ["A", "A", "A", "B"])
    tree = train_tree(data)
    assert len(tree.nodes) == 1
    np.testing.assert_allclose(tree.nodes[0]["proba"], [0.75, 0.25])


def test_tree_empty_dataset():
    with pytest.raises(EmptyDataset):
        train_tree(FeatureSet([], ("f0",), ("A", "B")))


def test_tree_leaf_probabilities_sum_to_one():
    rng = np.random.default_rng(31)
    X = rng.normal(size=(50, 4))
    labels = ["A" if rng.random() < 0.5 else "B" for _ in range(50)]
    tree = train_tree(make_set(X, labels))
    for node in tree.nodes:
        if "proba" in node:
            assert sum(node["proba"]) == pytest.approx(1.0, abs=1e-9)


def test_tree_monotone_feature_scaling_preserves_predictions():
    rng = np.random.default_rng(32)
    X = rng.normal(size=(60, 3))
    labels = ["A" if x[0] + 0.5 * x[1] > 0 else "B" for x in X]
    data = make_set(X, labels)
    # strictly increasing per-feature transform
    g = lambda M: np.stack([np.exp(M[:, 0]), M[:, 1] ** 3, 5 * M[:, 2] + 1],
                           axis=1)
    data_g = make_set(g(X), labels)
    tree = train_tree(data)
    tree_g = train_tree(data_g)
    X_test = rng.normal(size=(40, 3))
    Xg_test = g(X_test)
    for x, xg in zip(X_test, Xg_test):
        assert np.argmax(tree.predict_proba_row(x)) == \
            np.argmax(tree_g.predict_proba_row(xg))


# --- train_forest ---

def test_forest_deterministic():
    rng = np.random.default_rng(33)
    X = rng.normal(size=(40, 5))
    labels = ["A" if x[2] > 0 else "B" for x in X]
    data = make_set(X, labels)
    f1 = train_forest(data, n_trees=10, seed=7)
    f2 = train_forest(data, n_trees=10, seed=7)
    assert f1.to_dict() == f2.to_dict()
    np.testing.assert_array_equal(f1.importances, f2.importances)


def test_forest_reduces_to_single_tree():
    rng = np.random.default_rng(34)
    X = rng.normal(size=(30, 4))
    labels = ["A" if x[1] > 0 else "B" for x in X]
    data = make_set(X, labels)
    forest = train_forest(data, n_trees=1, mtry=4, bootstrap=False)
    tree = train_tree(data)
    assert forest.trees[0].nodes == tree.nodes


def test_forest_importance_finds_informative_feature():
    rng = np.random.default_rng(35)
    X = rng.normal(size=(80, 5))
    labels = ["A" if x[0] > 0.1 else "B" for x in X]
    forest = train_forest(make_set(X, labels), n_trees=20, mtry=2, seed=1)
    assert np.argmax(forest.importances) == 0
    assert forest.importances[0] > max(forest.importances[1:])
    assert forest.importances.sum() == pytest.approx(1.0, abs=1e-9)


def test_forest_proba_is_mean_of_trees():
    rng = np.random.default_rng(36)
    X = rng.normal(size=(50, 4))
    labels = ["A" if rng.random() < 0.6 else "B" for _ in range(50)]
    forest = train_forest(make_set(X, labels), n_trees=15, mtry=2, seed=2)
    for _ in range(20):
        x = rng.normal(size=4)
        expected = np.mean([t.predict_proba_row(x) for t in forest.trees],
                           axis=0)
        np.testing.assert_allclose(forest.predict_proba_values(x), expected)


def test_forest_pure_leaves_zero_importance():
    data = make_set([[1.0], [1.0]], ["A", "A"])
    forest = train_forest(data, n_trees=3, mtry=1, seed=0)
    assert forest.no_splits
    np.testing.assert_array_equal(forest.importances, 0.0)


# --- train_svm ---

def test_svm_separable_two_points():
    data = make_set([[-1.0], [1.0]], ["A", "B"])
    svm = train_svm(data, lam=1e-2, epochs=100, seed=0)
    assert svm.decision_value(np.array([-1.0])) < 0
    assert svm.decision_value(np.array([1.0])) > 0


def test_svm_zero_epochs():
    data = make_set([[-1.0], [1.0]], ["A", "B"])
    svm = train_svm(data, epochs=0)
    np.testing.assert_array_equal(svm.weights, 0.0)
    assert svm.bias == 0.0
    x = FeatureVector(("f0",), np.array([0.3]), "c")
    np.testing.assert_array_equal(predict_proba(svm, x), [0.5, 0.5])
    assert predict_class(svm, x) == 0  # tie-break: lowest class index


def test_svm_standardization_invariant_under_duplication():
    X = [[-1.0, 2.0], [1.0, 0.0], [0.5, -1.0], [-0.5, 1.5]]
    labels = ["A", "B", "B", "A"]
    svm1 = train_svm(make_set(X, labels), epochs=1)
    svm2 = train_svm(make_set(X + X, labels + labels), epochs=1)
    np.testing.assert_allclose(svm1.mean, svm2.mean)
    np.testing.assert_allclose(svm1.std, svm2.std)


def test_svm_rejects_multiclass():
    data = make_set([[0.0], [1.0], [2.0]], ["A", "B", "C"],
                    class_names=("A", "B", "C"))
    with pytest.raises(NotBinary):
        train_svm(data)


def test_svm_zero_variance_feature_gets_unit_std():
    data = make_set([[1.0, 5.0], [2.0, 5.0]], ["A", "B"])
    svm = train_svm(data, epochs=1)
    assert svm.std[1] == 1.0


def test_svm_objective_not_worse_than_zero_weights():
    rng = np.random.default_rng(37)
    X = rng.normal(size=(60, 3))
    labels = ["A" if x[0] > 0 else "B" for x in X]
    data = make_set(X, labels)
    trained = train_svm(data, lam=1e-2, epochs=50, seed=3)
    zero = LinearSvm(np.zeros(3), 0.0, trained.mean, trained.std,
                     data.names, data.class_names, trained.lam, 0, 3)
    y_pm = np.where(data.labels() == 1, 1.0, -1.0)
    assert svm_objective(trained, data.matrix(), y_pm) <= \
        svm_objective(zero, data.matrix(), y_pm)


# --- predict_proba / soft_vote ---

def test_pure_leaf_forest_proba():
    data = make_set([[1.0], [2.0]], ["A", "A"])
    forest = train_forest(data, n_trees=1, mtry=1, seed=0)
    x = FeatureVector(("f0",), np.array([1.5]), "c")
    np.testing.assert_array_equal(predict_proba(forest, x), [1.0, 0.0])


def test_svm_logistic_at_zero():
    svm = LinearSvm(np.zeros(1), 0.0, np.zeros(1), np.ones(1),
                    ("f0",), ("A", "B"), 1e-3, 0, 0)
    np.testing.assert_array_equal(svm.predict_proba_values(np.array([2.0])),
                                  [0.5, 0.5])


def test_forest_three_of_four_trees():
    # trained pure-leaf trees voting 3:1 average to [0.25, 0.75]
    trees = []
    for label in ["B", "B", "B", "A"]:
        trees.append(train_tree(make_set([[0.0]], [label])))
    from audioanom.models import RandomForest
    forest = RandomForest(trees, ("f0",), ("A", "B"), 1, 0, np.zeros(1))
    np.testing.assert_allclose(forest.predict_proba_values(np.array([0.0])),
                               [0.25, 0.75])


def test_soft_vote_identical_members():
    data = make_set([[0.0], [1.0], [2.0], [3.0]], ["A", "A", "B", "B"])
    forest = train_forest(data, n_trees=3, mtry=1, seed=1)
    ens = EnsembleModel([(forest, 0.7), (forest, 0.3)])
    x = FeatureVector(data.names, np.array([0.5]), "c")
    np.testing.assert_allclose(predict_proba(ens, x),
                               predict_proba(forest, x))


def test_soft_vote_weighted_average():
    class Stub:
        feature_names = ("f0",)
        class_names = ("A", "B")

        def __init__(self, proba):
            self.proba = np.array(proba)

        def predict_proba_values(self, x):
            return self.proba

    ens = EnsembleModel([(Stub([0.9, 0.1]), 0.5), (Stub([0.2, 0.8]), 0.5)])
    x = FeatureVector(("f0",), np.array([0.0]), "c")
    cls, proba = soft_vote(ens, x)
    np.testing.assert_allclose(proba, [0.55, 0.45])
    assert cls == 0

    tie = EnsembleModel([(Stub([0.5, 0.5]), 1.0)])
    cls, _ = soft_vote(tie, x)
    assert cls == 0


def test_schema_mismatch_rejected():
    data = make_set([[0.0], [1.0]], ["A", "B"])
    forest = train_forest(data, n_trees=1, mtry=1, seed=0)
    bad = FeatureVector(("other",), np.array([0.0]), "c")
    with pytest.raises(SchemaMismatch):
        predict_proba(forest, bad)


# --- feature_importance ---

def test_importance_ranking_and_ties():
    rng = np.random.default_rng(38)
    X = rng.normal(size=(80, 3))
    labels = ["A" if x[0] > 0 else "B" for x in X]
    forest = train_forest(make_set(X, labels), n_trees=10, mtry=1, seed=4)
    ranked = feature_importance(forest)
    assert ranked[0][0] == "f0"
    values = [v for _, v in ranked]
    assert values == sorted(values, reverse=True)
    assert sum(values) == pytest.approx(1.0, abs=1e-9)


# --- serialization ---

def test_model_round_trip_identical_predictions(tmp_path):
    rng = np.random.default_rng(39)
    X = rng.normal(size=(60, 4))
    labels = ["A" if x[0] - x[3] > 0 else "B" for x in X]
    data = make_set(X, labels)
    forest = train_forest(data, n_trees=5, mtry=2, seed=5)
    svm = train_svm(data, epochs=20, seed=5)
    ens = EnsembleModel([(forest, 0.5), (svm, 0.5)])
    for model in (forest, svm, ens):
        path = tmp_path / "model.json"
        save_model(model, path)
        back = load_model(path)
        for _ in range(100):
            x = rng.normal(size=4)
            np.testing.assert_array_equal(back.predict_proba_values(x),
                                          model.predict_proba_values(x))


def test_model_format_is_versioned(tmp_path):
    data = make_set([[0.0], [1.0]], ["A", "B"])
    forest = train_forest(data, n_trees=1, mtry=1, seed=0)
    path = tmp_path / "f.json"
    save_model(forest, path)
    import json
    doc = json.loads(path.read_text())
    assert doc["format_version"] == 1
    assert doc["kind"] == "random_forest"
    with pytest.raises(ValueError):
        model_from_dict({"kind": "mystery"})
