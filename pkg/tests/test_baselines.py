import json

import numpy as np
import pytest

from malbarcode import kernels
from malbarcode.baselines.forest import DecisionTree, ForestModel, entropy, gini, train_random_forest
from malbarcode.baselines.mlp import load_mlp, save_mlp, train_mlp
from malbarcode.baselines.svc import SvcModel, kernel_matrix, kkt_violation, resolve_gamma, train_svc
from malbarcode.dataset import FeatureTable, SynthProfile, stratified_split, synth_generate
from malbarcode.errors import DataError, DegenerateError, ParameterError


def _blobs(sep=6.0, n_classes=2, n_features=2, per_class=100, seed=0):
    t = synth_generate(SynthProfile(n_classes, n_features, sep, seed, per_class))
    return t, stratified_split(t, (0.7, 0.0, 0.3), seed)


def _acc(model, t, rows):
    return float(np.mean(model.predict(t.values[rows]) == t.labels[rows]))


def test_impurities():
    assert gini([5, 5]) == pytest.approx(0.5)
    assert gini([4, 0]) == 0.0
    assert entropy([2, 2]) == pytest.approx(1.0)
    assert entropy([3, 0]) == 0.0


def test_single_tree_memorises_distinct_points():
    rng = np.random.default_rng(0)
    t = FeatureTable(("a", "b"), rng.random((60, 2)), rng.integers(0, 3, 60), ("x", "y", "z"))
    f = train_random_forest(t, np.arange(60), n_estimators=1, bootstrap=False)
    assert _acc(f, t, np.arange(60)) == 1.0
    tree = f.trees[0]
    leaves = tree.feature < 0
    assert np.all(np.count_nonzero(tree.counts[leaves], axis=1) == 1)


def test_entropy_tree_also_memorises():
    rng = np.random.default_rng(1)
    t = FeatureTable(("a",), rng.random((40, 1)), rng.integers(0, 2, 40), ("x", "y"))
    f = train_random_forest(t, np.arange(40), n_estimators=1, bootstrap=False, criterion="entropy")
    assert _acc(f, t, np.arange(40)) == 1.0


def test_obvious_split_threshold():
    t = FeatureTable(("a",), [[0.0], [1.0], [2.0], [3.0]], [0, 0, 1, 1], ("x", "y"))
    tree = train_random_forest(t, np.arange(4), n_estimators=1, bootstrap=False).trees[0]
    assert tree.feature[0] == 0 and tree.threshold[0] == 1.5 and tree.n_nodes == 3


def test_forest_is_seeded_and_serialisable():
    t, s = _blobs(sep=1.5, n_classes=3, n_features=4)
    a = train_random_forest(t, s.train, n_estimators=5, seed=3)
    b = train_random_forest(t, s.train, n_estimators=5, seed=3)
    assert json.dumps(a.to_dict()) == json.dumps(b.to_dict())
    back = ForestModel.from_dict(json.loads(json.dumps(a.to_dict())))
    assert np.array_equal(back.predict(t.values), a.predict(t.values))
    c = train_random_forest(t, s.train, n_estimators=5, seed=3, n_jobs=2)
    assert json.dumps(a.to_dict()) == json.dumps(c.to_dict())


def test_tree_round_trip():
    t, s = _blobs(sep=1.0, n_classes=3)
    tree = train_random_forest(t, s.train, n_estimators=1, seed=0).trees[0]
    back = DecisionTree.from_dict(tree.to_dict())
    assert np.array_equal(back.apply(t.values), tree.apply(t.values))


def test_vote_ties_go_to_lowest_class():
    leaf0 = DecisionTree(np.array([-1]), np.array([0.0]), np.array([-1]), np.array([-1]), np.array([[0, 3]]))
    leaf1 = DecisionTree(np.array([-1]), np.array([0.0]), np.array([-1]), np.array([-1]), np.array([[3, 0]]))
    f = ForestModel([leaf0, leaf1], 2, "gini", 0)
    assert f.predict(np.zeros((1, 1))).tolist() == [0]


def test_forest_argument_errors():
    t, s = _blobs()
    with pytest.raises(ParameterError):
        train_random_forest(t, s.train, criterion="mse")
    with pytest.raises(ParameterError):
        train_random_forest(t, s.train, n_estimators=0)
    with pytest.raises(DataError):
        train_random_forest(t, [])


def test_gamma_modes():
    X = np.array([[0.0, 2.0], [2.0, 0.0]])
    assert resolve_gamma("scale", X) == pytest.approx(1 / (2 * 1.0))
    assert resolve_gamma("auto", X) == 0.5
    assert resolve_gamma(0.25, X) == 0.25
    with pytest.raises(ParameterError):
        resolve_gamma(-1.0, X)
    with pytest.raises(ParameterError):
        kernel_matrix(X, X, "sigmoid", 1.0)


def test_smo_satisfies_kkt():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(80, 2))
    y = np.where(X[:, 0] + 0.5 * rng.normal(size=80) > 0, 1.0, -1.0)
    K = kernel_matrix(X, X, "rbf", 0.5)
    alpha, b, _ = kernels.smo_solve(K, y, 1.0, 1e-3, 10**6)
    assert kkt_violation(K, y, alpha, b, 1.0) <= 1e-3
    assert abs(float(alpha @ y)) <= 1e-9
    assert np.all((alpha >= 0) & (alpha <= 1.0))


def test_svc_matches_reference_on_separable_data():
    sk = pytest.importorskip("sklearn.svm")
    t, s = _blobs(sep=2.5, n_classes=2)
    ours = train_svc(t, s.train)
    ref = sk.SVC(kernel="rbf", gamma="scale", C=1.0, tol=1e-3).fit(t.values[s.train], t.labels[s.train])
    assert np.mean(ours.predict(t.values[s.test]) == ref.predict(t.values[s.test])) >= 0.98


def test_svc_subsamples_large_training_sets():
    t, s = _blobs(sep=6.0, n_classes=2, per_class=150)
    m = train_svc(t, s.train, max_rows=50)
    assert m.subsampled and m.n_train_rows == 50
    assert _acc(m, t, s.test) >= 0.99


def test_svc_round_trip_and_single_class():
    t, s = _blobs()
    m = train_svc(t, s.train, kernel="linear")
    back = SvcModel.from_dict(json.loads(json.dumps(m.to_dict())))
    assert np.array_equal(back.decision_function(t.values), m.decision_function(t.values))
    one = np.flatnonzero(t.labels == 0)
    with pytest.raises(DegenerateError):
        train_svc(t, one)


def test_mlp_learns_xor(tmp_path):
    X = np.array([[0, 0], [0, 1], [1, 0], [1, 1]] * 25, dtype=float)
    y = (X[:, 0] != X[:, 1]).astype(int)
    t = FeatureTable(("a", "b"), X, y, ("even", "odd"))
    m = train_mlp(t, np.arange(100), hidden_sizes=(8, 8), max_iter=400, seed=0, learning_rate=0.01)
    assert _acc(m, t, np.arange(4)) == 1.0
    back = load_mlp(save_mlp(m, tmp_path / "mlp.json"))
    assert np.array_equal(back.predict(X), m.predict(X))


def test_mlp_arguments():
    t, s = _blobs()
    with pytest.raises(ParameterError):
        train_mlp(t, s.train, hidden_sizes=())
    with pytest.raises(ParameterError):
        train_mlp(t, s.train, solver="lbfgs")
    a = train_mlp(t, s.train, max_iter=5, seed=4, solver="sgd")
    b = train_mlp(t, s.train, max_iter=5, seed=4, solver="sgd")
    assert all(np.array_equal(p, q) for p, q in zip(a.parameters(), b.parameters()))


@pytest.mark.parametrize("trainer", ["rf", "mlp", "svc"])
def test_separated_blobs_are_solved(trainer):
    t, s = _blobs(sep=6.0, n_classes=2, n_features=1, per_class=200)
    fit = {
        "rf": lambda: train_random_forest(t, s.train, n_estimators=20),
        "mlp": lambda: train_mlp(t, s.train),
        "svc": lambda: train_svc(t, s.train),
    }[trainer]()
    assert _acc(fit, t, s.test) >= 0.99
