"""Random forest of unpruned CART trees grown by the ``build_tree`` kernel."""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
import math

import numpy as np

from .. import kernels
from ..errors import DataError, ParameterError

CRITERIA = {"gini": 0, "entropy": 1}


def gini(counts):
    counts = np.asarray(counts, dtype=np.float64)
    n = counts.sum()
    return 0.0 if n == 0 else float(1.0 - np.sum((counts / n) ** 2))


def entropy(counts):
    counts = np.asarray(counts, dtype=np.float64)
    p = counts[counts > 0] / counts.sum()
    return float(-np.sum(p * np.log2(p)))


@dataclass
class DecisionTree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    counts: np.ndarray

    @property
    def n_nodes(self):
        return self.feature.shape[0]

    def apply(self, X):
        """Leaf index reached by every row of ``X``."""
        X = np.asarray(X, dtype=np.float64)
        node = np.zeros(X.shape[0], dtype=np.int64)
        rows = np.arange(X.shape[0])
        active = self.feature[node] >= 0
        while active.any():
            r, n = rows[active], node[active]
            go_left = X[r, self.feature[n]] <= self.threshold[n]
            node[r] = np.where(go_left, self.left[n], self.right[n])
            active = self.feature[node] >= 0
        return node

    def predict(self, X):
        return self.counts[self.apply(X)].argmax(axis=1)

    def to_dict(self, node=0):
        if self.feature[node] < 0:
            return {"counts": self.counts[node].tolist()}
        return {
            "feature": int(self.feature[node]),
            "threshold": float(self.threshold[node]),
            "left": self.to_dict(int(self.left[node])),
            "right": self.to_dict(int(self.right[node])),
        }

    @classmethod
    def from_dict(cls, doc):
        feature, threshold, left, right, counts = [], [], [], [], []

        def visit(rec):
            i = len(feature)
            feature.append(rec.get("feature", -1))
            threshold.append(rec.get("threshold", 0.0))
            left.append(-1)
            right.append(-1)
            counts.append(None)
            if "counts" in rec:
                counts[i] = rec["counts"]
                return i, np.asarray(rec["counts"])
            li, lc = visit(rec["left"])
            ri, rc = visit(rec["right"])
            left[i], right[i] = li, ri
            counts[i] = (lc + rc).tolist()
            return i, lc + rc

        visit(doc)
        return cls(
            np.array(feature, dtype=np.int64),
            np.array(threshold, dtype=np.float64),
            np.array(left, dtype=np.int64),
            np.array(right, dtype=np.int64),
            np.array(counts, dtype=np.int64),
        )


@dataclass
class ForestModel:
    trees: list
    n_classes: int
    criterion: str
    seed: int
    bootstrap: bool = True

    def votes(self, X):
        X = np.asarray(X, dtype=np.float64)
        votes = np.zeros((X.shape[0], self.n_classes), dtype=np.int64)
        rows = np.arange(X.shape[0])
        for tree in self.trees:
            np.add.at(votes, (rows, tree.predict(X)), 1)
        return votes

    def predict(self, X):
        return self.votes(X).argmax(axis=1)

    def to_dict(self):
        return {
            "kind": "random_forest",
            "n_classes": self.n_classes,
            "criterion": self.criterion,
            "seed": self.seed,
            "bootstrap": self.bootstrap,
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, doc):
        trees = [DecisionTree.from_dict(t) for t in doc["trees"]]
        return cls(trees, doc["n_classes"], doc["criterion"], doc["seed"], doc.get("bootstrap", True))


def _fit_tree(X, y, n_classes, max_features, criterion, tree_seed, bootstrap):
    n = X.shape[0]
    if bootstrap:
        sample = np.random.default_rng(tree_seed).integers(0, n, size=n)
    else:
        sample = np.arange(n)
    parts = kernels.build_tree(X, y, sample, n_classes, max_features, CRITERIA[criterion], tree_seed)
    return DecisionTree(*parts)


def train_random_forest(table, train_rows, n_estimators=100, criterion="gini", seed=0,
                        bootstrap=True, max_features="sqrt", n_jobs=1):
    """Fit ``n_estimators`` trees; tree ``i`` uses seed ``seed + i``."""
    if criterion not in CRITERIA:
        raise ParameterError(f"criterion must be one of {sorted(CRITERIA)}")
    if n_estimators < 1:
        raise ParameterError("n_estimators must be >= 1")
    rows = np.asarray(train_rows, dtype=np.int64)
    if rows.size == 0:
        raise DataError("no training rows")
    X = np.ascontiguousarray(table.values[rows])
    y = np.ascontiguousarray(table.labels[rows])
    d = X.shape[1]
    k = math.ceil(math.sqrt(d)) if max_features == "sqrt" else int(max_features or d)
    n_classes = len(table.class_names)

    def fit(i):
        return _fit_tree(X, y, n_classes, k, criterion, seed + i, bootstrap)

    if n_jobs > 1:
        with ThreadPoolExecutor(n_jobs) as pool:
            trees = list(pool.map(fit, range(n_estimators)))
    else:
        trees = [fit(i) for i in range(n_estimators)]
    return ForestModel(trees, n_classes, criterion, seed, bootstrap)
