"""One-vs-rest kernel SVM trained with SMO."""

from dataclasses import dataclass, field

import numpy as np

from .. import kernels
from ..errors import DegenerateError, ParameterError

MAX_TRAIN_ROWS = 4000


def resolve_gamma(gamma, X):
    if gamma == "scale":
        var = X.var()
        return 1.0 / (X.shape[1] * var) if var > 0 else 1.0
    if gamma == "auto":
        return 1.0 / X.shape[1]
    gamma = float(gamma)
    if gamma <= 0:
        raise ParameterError("gamma must be positive")
    return gamma


def kernel_matrix(A, B, kernel, gamma, degree=3, coef0=0.0):
    if kernel == "rbf":
        sq = (A * A).sum(axis=1)[:, None] + (B * B).sum(axis=1)[None, :] - 2.0 * A @ B.T
        return np.exp(-gamma * np.maximum(sq, 0.0))
    if kernel == "poly":
        return (gamma * (A @ B.T) + coef0) ** degree
    if kernel == "linear":
        return A @ B.T
    raise ParameterError(f"unknown kernel {kernel!r}")


@dataclass
class SvcModel:
    kernel: str
    gamma: float
    C: float
    support_vectors: np.ndarray
    # one row per class: alpha_i * y_i for every support vector (0 where unused)
    dual_coef: np.ndarray
    intercept: np.ndarray
    n_train_rows: int = 0
    subsampled: bool = False
    n_iter: list = field(default_factory=list)

    def decision_function(self, X):
        K = kernel_matrix(np.asarray(X, dtype=np.float64), self.support_vectors, self.kernel, self.gamma)
        return K @ self.dual_coef.T + self.intercept

    def predict(self, X):
        return self.decision_function(X).argmax(axis=1)

    def to_dict(self):
        return {
            "kind": "svc",
            "kernel": self.kernel,
            "gamma": self.gamma,
            "C": self.C,
            "support_vectors": self.support_vectors.tolist(),
            "dual_coef": self.dual_coef.tolist(),
            "intercept": self.intercept.tolist(),
            "n_train_rows": self.n_train_rows,
            "subsampled": self.subsampled,
        }

    @classmethod
    def from_dict(cls, doc):
        return cls(
            doc["kernel"], doc["gamma"], doc["C"],
            np.atleast_2d(np.asarray(doc["support_vectors"], dtype=np.float64)),
            np.asarray(doc["dual_coef"], dtype=np.float64),
            np.asarray(doc["intercept"], dtype=np.float64),
            doc.get("n_train_rows", 0), doc.get("subsampled", False),
        )


def _cap_rows(rows, labels, max_rows, seed):
    """Class-proportional random subset of at most ``max_rows`` rows."""
    if rows.size <= max_rows:
        return rows, False
    rng = np.random.default_rng(seed)
    keep = []
    for c in np.unique(labels[rows]):
        pool = rows[labels[rows] == c]
        n = int(round(max_rows * pool.size / rows.size))
        keep.append(rng.choice(pool, size=min(n, pool.size), replace=False))
    return np.sort(np.concatenate(keep))[:max_rows], True


def train_svc(table, train_rows, kernel="rbf", gamma_mode="scale", C=1.0, tol=1e-3,
              max_passes=10000, max_rows=MAX_TRAIN_ROWS, seed=0):
    """One binary SMO problem per class against the rest.

    Training sets larger than ``max_rows`` are subsampled per class; the
    model records that it was.
    """
    rows = np.asarray(train_rows, dtype=np.int64)
    rows, subsampled = _cap_rows(rows, table.labels, max_rows, seed)
    X = table.values[rows]
    y = table.labels[rows]
    classes = np.unique(y)
    if classes.size < 2:
        raise DegenerateError("SVC training data holds a single class")
    gamma = resolve_gamma(gamma_mode, X)
    K = kernel_matrix(X, X, kernel, gamma)
    K = (K + K.T) / 2.0  # the solver reads rows, so K must be exactly symmetric
    n_classes = len(table.class_names)
    coef = np.zeros((n_classes, X.shape[0]))
    intercept = np.full(n_classes, -np.inf)
    n_iter = []
    for c in range(n_classes):
        if c not in classes:
            continue  # never predicted
        target = np.where(y == c, 1.0, -1.0)
        alpha, b, it = kernels.smo_solve(K, target, float(C), float(tol), int(max_passes) * X.shape[0])
        coef[c] = alpha * target
        intercept[c] = b
        n_iter.append(int(it))
    used = np.flatnonzero(np.any(coef != 0, axis=0))
    return SvcModel(kernel, gamma, float(C), X[used], coef[:, used], intercept,
                    int(rows.size), subsampled, n_iter)


def kkt_violation(K, y, alpha, b, C):
    """Largest KKT residual of a binary dual solution, measured on y*f(x)."""
    f = K @ (alpha * y) + b
    margin = y * f
    free = (alpha > 1e-12) & (alpha < C - 1e-12)
    at_zero = alpha <= 1e-12
    at_c = alpha >= C - 1e-12
    worst = 0.0
    if free.any():
        worst = max(worst, float(np.max(np.abs(margin[free] - 1))))
    if at_zero.any():
        worst = max(worst, float(np.max(np.maximum(1 - margin[at_zero], 0))))
    if at_c.any():
        worst = max(worst, float(np.max(np.maximum(margin[at_c] - 1, 0))))
    return worst
