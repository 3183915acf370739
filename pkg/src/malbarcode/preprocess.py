"""Scaling, univariate feature scoring, top-K selection and payload serialization."""

from dataclasses import dataclass, field
import json
import math

import numpy as np

from .errors import DegreesOfFreedomError, FieldRangeError, ParameterError, PreconditionError


@dataclass(frozen=True)
class ScalerParams:
    kind: str
    # min/max for "minmax", mean/std (population) for "standard"
    low: np.ndarray
    high: np.ndarray
    constant: np.ndarray

    def to_dict(self):
        return {"kind": self.kind, "low": self.low.tolist(), "high": self.high.tolist()}

    @classmethod
    def from_dict(cls, d):
        low = np.asarray(d["low"], dtype=np.float64)
        high = np.asarray(d["high"], dtype=np.float64)
        constant = high == low if d["kind"] == "minmax" else high == 0
        return cls(d["kind"], low, high, constant)


@dataclass(frozen=True)
class FeatureScores:
    method: str
    scores: np.ndarray
    dof: tuple
    degenerate: np.ndarray = field(default=None)


@dataclass(frozen=True)
class Payload:
    data: bytes
    feature_indices: tuple = ()
    precision: int = 4

    def __len__(self):
        return len(self.data)


def fit_scaler(table, train_rows, kind="minmax"):
    rows = np.asarray(train_rows, dtype=np.int64)
    if rows.size == 0:
        raise ParameterError("cannot fit a scaler on zero rows")
    x = table.values[rows]
    if kind == "minmax":
        low, high = x.min(axis=0), x.max(axis=0)
        return ScalerParams(kind, low, high, high == low)
    if kind == "standard":
        mean = x.mean(axis=0)
        std = np.sqrt(np.mean((x - mean) ** 2, axis=0))
        return ScalerParams(kind, mean, std, std == 0)
    raise ParameterError(f"unknown scaler kind {kind!r}")


def apply_scaler(table, params):
    x = table.values
    if x.shape[1] != params.low.shape[0]:
        raise ParameterError(f"table has {x.shape[1]} columns, scaler was fit on {params.low.shape[0]}")
    span = params.high - params.low if params.kind == "minmax" else params.high
    safe = np.where(params.constant, 1.0, span)
    out = (x - params.low) / safe
    out[:, params.constant] = 0.0
    if params.kind == "minmax":
        np.clip(out, 0.0, 1.0, out=out)
    return table.with_values(out)


def _rows_and_labels(table, rows):
    rows = np.arange(table.n_rows) if rows is None else np.asarray(rows, dtype=np.int64)
    return table.values[rows], table.labels[rows], rows


def chi2_scores(table, rows=None):
    """Chi-squared statistic of each non-negative feature against the class labels."""
    x, y, rows = _rows_and_labels(table, rows)
    if x.size and x.min() < 0:
        r, c = np.argwhere(x < 0)[0]
        raise PreconditionError(
            f"chi-squared needs non-negative inputs; column {table.column_names[c]!r} is negative at row {rows[r]}"
        )
    classes = np.unique(y)
    onehot = (y[:, None] == classes[None, :]).astype(np.float64)
    observed = onehot.T @ x  # (k, d)
    class_freq = onehot.mean(axis=0)
    expected = observed.sum(axis=0)[None, :] * class_freq[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(expected > 0, (observed - expected) ** 2 / expected, 0.0)
    return FeatureScores("chi2", terms.sum(axis=0), (len(classes) - 1,), np.zeros(x.shape[1], dtype=bool))


def anova_f_scores(table, rows=None):
    """One-way ANOVA F statistic per feature.

    Features whose values are constant inside every class but differ between
    classes get ``inf`` and are flagged degenerate.
    """
    x, y, _ = _rows_and_labels(table, rows)
    classes = np.unique(y)
    k, n = len(classes), x.shape[0]
    if k < 2:
        raise DegreesOfFreedomError("ANOVA needs at least two classes")
    if n <= k:
        raise DegreesOfFreedomError(f"{n} rows leave no within-class degrees of freedom for {k} classes")
    grand = x.mean(axis=0)
    ss_between = np.zeros(x.shape[1])
    ss_within = np.zeros(x.shape[1])
    flat_within = np.ones(x.shape[1], dtype=bool)
    for c in classes:
        xc = x[y == c]
        mc = xc.mean(axis=0)
        ss_between += xc.shape[0] * (mc - grand) ** 2
        ss_within += ((xc - mc) ** 2).sum(axis=0)
        flat_within &= np.ptp(xc, axis=0) == 0
    constant = np.ptp(x, axis=0) == 0
    degenerate = flat_within & ~constant
    with np.errstate(divide="ignore", invalid="ignore"):
        f = (ss_between / (k - 1)) / (ss_within / (n - k))
    f = np.where(constant, 0.0, np.where(degenerate, np.inf, f))
    return FeatureScores("anova_f", f, (k - 1, n - k), degenerate)


def select_k_best(scores, k):
    """Indices of the ``k`` best scores, best first; ties go to the lower index."""
    values = np.asarray(getattr(scores, "scores", scores), dtype=np.float64)
    if not 1 <= k <= values.size:
        raise ParameterError(f"k must lie in [1, {values.size}], got {k}")
    order = np.lexsort((np.arange(values.size), -values))
    return [int(i) for i in order[:k]]


def serialize_payload(values, precision=4, feature_indices=()):
    """Render values in [0, 1] as comma-joined fixed-point ASCII."""
    if not 1 <= precision <= 8:
        raise ParameterError("precision must lie in [1, 8]")
    parts = []
    for v in values:
        v = float(v)
        if not 0.0 <= v <= 1.0:
            raise FieldRangeError(f"payload value {v} is outside [0, 1]")
        parts.append(f"{v:.{precision}f}")
    return Payload(",".join(parts).encode("ascii"), tuple(int(i) for i in feature_indices), precision)


def payload_length(k, precision):
    return k * (2 + precision) + max(k - 1, 0)


def write_selection(path, method, k, indices, scores):
    scores = [None if math.isinf(s) else float(s) for s in np.asarray(scores, dtype=float)]
    doc = {"method": method, "k": int(k), "indices": [int(i) for i in indices], "scores": scores}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)


def read_selection(path):
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    doc["scores"] = [math.inf if s is None else s for s in doc["scores"]]
    return doc
