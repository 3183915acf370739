import math

from hypothesis import given, settings, strategies as st
import numpy as np
import pytest

from malbarcode.dataset import FeatureTable
from malbarcode.errors import DegreesOfFreedomError, FieldRangeError, ParameterError, PreconditionError
from malbarcode.preprocess import (
    anova_f_scores,
    apply_scaler,
    chi2_scores,
    fit_scaler,
    payload_length,
    read_selection,
    select_k_best,
    serialize_payload,
    write_selection,
)


def _table(x, y, k=None):
    x = np.asarray(x, dtype=float)
    k = k or int(max(y)) + 1
    return FeatureTable(tuple(f"c{j}" for j in range(x.shape[1])), x, y, tuple(f"k{i}" for i in range(k)))


def brute_chi2(x, y):
    classes = sorted(set(y))
    n = len(y)
    out = []
    for j in range(len(x[0])):
        total = math.fsum(row[j] for row in x)
        s = []
        for c in classes:
            obs = math.fsum(x[i][j] for i in range(n) if y[i] == c)
            exp = total * sum(1 for v in y if v == c) / n
            s.append((obs - exp) ** 2 / exp if exp > 0 else 0.0)
        out.append(math.fsum(s))
    return out


def brute_anova(x, y):
    classes = sorted(set(y))
    n, k = len(y), len(classes)
    out = []
    for j in range(len(x[0])):
        col = [row[j] for row in x]
        grand = math.fsum(col) / n
        ssb, ssw = [], []
        for c in classes:
            vals = [col[i] for i in range(n) if y[i] == c]
            m = math.fsum(vals) / len(vals)
            ssb.append(len(vals) * (m - grand) ** 2)
            ssw.extend((v - m) ** 2 for v in vals)
        out.append((math.fsum(ssb) / (k - 1)) / (math.fsum(ssw) / (n - k)))
    return out


def _rel(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300))


def test_scores_match_brute_force_on_200_tables():
    rng = np.random.default_rng(2024)
    worst_chi, worst_f = 0.0, 0.0
    for _ in range(200):
        n, d, k = int(rng.integers(8, 40)), int(rng.integers(1, 6)), int(rng.integers(2, 5))
        y = np.concatenate([np.arange(k), rng.integers(0, k, n - k)])
        x = rng.random((n, d)) * rng.choice([1.0, 10.0, 1000.0])
        t = _table(x, y, k)
        worst_chi = max(worst_chi, _rel(chi2_scores(t).scores, brute_chi2(x.tolist(), y.tolist())))
        worst_f = max(worst_f, _rel(anova_f_scores(t).scores, brute_anova(x.tolist(), y.tolist())))
    assert worst_chi <= 1e-12 and worst_f <= 1e-12


def test_small_worked_chi2():
    # observed per class (3, 1), expected (2, 2): 0.5 + 0.5
    t = _table([[1], [2], [1], [0]], [0, 0, 1, 1])
    assert chi2_scores(t).scores[0] == pytest.approx(1.0, rel=1e-15)


def test_small_worked_anova():
    # means 1 and 3, grand 2: between 4 / 1, within 4 / 2
    t = _table([[0], [2], [2], [4]], [0, 0, 1, 1])
    r = anova_f_scores(t)
    assert r.scores[0] == pytest.approx(2.0, rel=1e-15) and r.dof == (1, 2)


def test_chi2_rejects_negative_values():
    with pytest.raises(PreconditionError, match="c1"):
        chi2_scores(_table([[1, 0], [1, -1]], [0, 1]))


def test_anova_degenerate_columns():
    t = _table([[5, 1, 0.0], [5, 1, 0.1], [5, 2, 0.3], [5, 2, 0.2]], [0, 0, 1, 1])
    r = anova_f_scores(t)
    assert r.scores[0] == 0.0
    assert math.isinf(r.scores[1]) and r.degenerate.tolist() == [False, True, False]
    with pytest.raises(DegreesOfFreedomError):
        anova_f_scores(_table([[1], [2]], [0, 1]))


def test_scores_restricted_to_rows():
    x = np.array([[1.0], [2.0], [3.0], [100.0]])
    t = _table(x, [0, 1, 0, 1])
    assert chi2_scores(t, [0, 1, 2]).scores[0] == pytest.approx(brute_chi2([[1], [2], [3]], [0, 1, 0])[0])


def test_select_k_best_order_and_ties():
    assert select_k_best([1.0, 5.0, 5.0, np.inf, 0.0], 3) == [3, 1, 2]
    with pytest.raises(ParameterError):
        select_k_best([1.0], 2)


def test_minmax_scaler_uses_train_rows_only():
    t = _table([[0.0, 3], [10.0, 3], [20.0, 3]], [0, 1, 0])
    p = fit_scaler(t, [0, 1], "minmax")
    out = apply_scaler(t, p)
    assert out.values[:, 0].tolist() == [0.0, 1.0, 1.0]  # clamped
    assert out.values[:, 1].tolist() == [0.0, 0.0, 0.0]  # constant column


def test_standard_scaler_population_std():
    t = _table([[1.0], [3.0]], [0, 1])
    out = apply_scaler(t, fit_scaler(t, [0, 1], "standard"))
    assert out.values[:, 0].tolist() == [-1.0, 1.0]
    with pytest.raises(ParameterError):
        fit_scaler(t, [0, 1], "robust")


@given(st.lists(st.floats(0, 1), min_size=1, max_size=30), st.integers(1, 8))
def test_payload_length_formula(values, precision):
    p = serialize_payload(values, precision)
    assert len(p) == payload_length(len(values), precision)
    parsed = [float(v) for v in p.data.decode().split(",")]
    assert all(abs(a - b) <= 0.5 * 10.0 ** -precision + 1e-12 for a, b in zip(parsed, values))


def test_payload_text():
    assert serialize_payload([0, 0.5, 1, 0.12346], 4).data == b"0.0000,0.5000,1.0000,0.1235"
    with pytest.raises(FieldRangeError):
        serialize_payload([1.5])
    with pytest.raises(ParameterError):
        serialize_payload([0.5], precision=0)


def test_selection_file_round_trip(tmp_path):
    write_selection(tmp_path / "s.json", "anova_f", 2, [3, 1], [0.5, np.inf])
    doc = read_selection(tmp_path / "s.json")
    assert doc["indices"] == [3, 1] and doc["k"] == 2
    assert doc["scores"][0] == 0.5 and math.isinf(doc["scores"][1])
