"""Pure-Python/numpy implementations of the hot kernels.

These are the reference versions; ``_kernels.pyx`` mirrors them loop for loop
and the test-suite checks the two agree.
"""

import math

import numpy as np

_FINDER_LEFT = np.array([1, 0, 1, 1, 1, 0, 1, 0, 0, 0, 0], dtype=np.int16)
_FINDER_RIGHT = _FINDER_LEFT[::-1].copy()


def _run_penalty(grid):
    seq = np.concatenate([grid, np.full((grid.shape[0], 1), 2, dtype=np.int16)], axis=1).ravel()
    change = np.flatnonzero(seq[1:] != seq[:-1]) + 1
    starts = np.concatenate([[0], change])
    lengths = np.diff(np.concatenate([starts, [seq.size]]))
    keep = (seq[starts] != 2) & (lengths >= 5)
    return int(np.sum(lengths[keep] - 2))


def _finder_penalty(grid):
    windows = np.lib.stride_tricks.sliding_window_view(grid, 11, axis=1)
    hits = np.all(windows == _FINDER_LEFT, axis=2) | np.all(windows == _FINDER_RIGHT, axis=2)
    return int(np.count_nonzero(hits))


def qr_penalty(grid):
    """Sum of the four QR mask penalty rules.

    ``grid`` is a square uint8 array, 1 = dark.  Scoring follows the common
    node-qrcode reading of the rules: rule 3 scans 11-module windows inside
    the symbol for 1011101 with four light modules on one side (a core with
    light on both sides scores twice); rule 4 scores
    10 * |ceil(dark% / 5) - 10|.
    """
    g = np.asarray(grid, dtype=np.int16)
    size = g.shape[0]
    n1 = _run_penalty(g) + _run_penalty(g.T)
    same = (g[:-1, :-1] == g[1:, :-1]) & (g[:-1, :-1] == g[:-1, 1:]) & (g[:-1, :-1] == g[1:, 1:])
    n2 = 3 * int(np.count_nonzero(same))
    n3 = 40 * (_finder_penalty(g) + _finder_penalty(g.T))
    dark = int(np.count_nonzero(g))
    total = size * size
    n4 = 10 * abs((dark * 20 + total - 1) // total - 10)
    return n1 + n2 + n3 + n4


MASK64 = (1 << 64) - 1


def splitmix64(state):
    """One step of splitmix64; returns ``(new_state, output)``."""
    state = (state + 0x9E3779B97F4A7C15) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return state, z ^ (z >> 31)


def xlogx_table(n):
    """``t[c] = c * log(c)`` for c in 0..n, using libm so compiled code can match it."""
    return np.array([0.0] + [c * math.log(c) for c in range(1, n + 1)])


def _class_sum(values):
    # fixed left-to-right order over classes
    acc = values[:, 0].copy()
    for c in range(1, values.shape[1]):
        acc = acc + values[:, c]
    return acc


def _node_score(left, right, nl, nr, criterion, xlogx):
    """Lower is better: n_left*imp_left + n_right*imp_right, up to a per-node constant."""
    if criterion == 0:
        sl = _class_sum(left * left).astype(np.float64)
        sr = _class_sum(right * right).astype(np.float64)
        return -(sl / nl + sr / nr)
    return (xlogx[nl] + xlogx[nr]) - _class_sum(xlogx[left]) - _class_sum(xlogx[right])


def _split_feature(xs, ys, n_classes, criterion, xlogx):
    n = xs.shape[0]
    order = np.argsort(xs, kind="stable")
    xs_sorted = xs[order]
    if xs_sorted[0] == xs_sorted[-1]:
        return None
    onehot = np.zeros((n, n_classes), dtype=np.int64)
    onehot[np.arange(n), ys[order]] = 1
    left = np.cumsum(onehot, axis=0)[:-1]
    right = left[-1] + onehot[-1] - left
    nl = np.arange(1, n, dtype=np.int64)
    nr = n - nl
    score = _node_score(left, right, nl, nr, criterion, xlogx)
    score = np.where(xs_sorted[1:] > xs_sorted[:-1], score, np.inf)
    k = int(np.argmin(score))
    thr = (xs_sorted[k] + xs_sorted[k + 1]) / 2.0
    if thr >= xs_sorted[k + 1]:
        thr = xs_sorted[k]
    return float(score[k]), float(thr)


def build_tree(X, y, sample_idx, n_classes, max_features, criterion, seed):
    """Grow one unpruned classification tree.

    ``sample_idx`` lists the training rows (repeats allowed, as produced by a
    bootstrap).  At every node the features are put in a random order drawn
    from splitmix64; the first ``max_features`` are scored and, if none of
    them can split the node, the remaining ones are tried in order until one
    does.  ``criterion`` is 0 for gini, 1 for entropy.  Nodes are stored in
    depth-first pre-order.  Returns ``(feature, threshold, left, right,
    counts)`` arrays; leaves have feature -1.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    d = X.shape[1]
    state = seed & MASK64
    feature, threshold, left_child, right_child, counts = [], [], [], [], []
    stack = [(np.asarray(sample_idx, dtype=np.int64), -1, 0)]
    xlogx = xlogx_table(len(sample_idx)) if criterion == 1 else None
    while stack:
        idx, parent, side = stack.pop()
        node = len(feature)
        if parent >= 0:
            (left_child if side == 0 else right_child)[parent] = node
        hist = np.bincount(y[idx], minlength=n_classes).astype(np.int64)
        feature.append(-1)
        threshold.append(0.0)
        left_child.append(-1)
        right_child.append(-1)
        counts.append(hist)
        if idx.shape[0] < 2 or np.count_nonzero(hist) <= 1:
            continue
        perm = list(range(d))
        for i in range(d - 1, 0, -1):
            state, r = splitmix64(state)
            j = r % (i + 1)
            perm[i], perm[j] = perm[j], perm[i]
        best = None
        ys = y[idx]
        for pos, f in enumerate(perm):
            if pos >= max_features and best is not None:
                break
            res = _split_feature(X[idx, f], ys, n_classes, criterion, xlogx)
            if res is not None and (best is None or res[0] < best[0]):
                best = (res[0], res[1], f)
        if best is None:
            continue
        _, thr, f = best
        feature[node] = f
        threshold[node] = thr
        go_left = X[idx, f] <= thr
        stack.append((idx[~go_left], node, 1))
        stack.append((idx[go_left], node, 0))
    return (
        np.array(feature, dtype=np.int64),
        np.array(threshold, dtype=np.float64),
        np.array(left_child, dtype=np.int64),
        np.array(right_child, dtype=np.int64),
        np.array(counts, dtype=np.int64).reshape(-1, n_classes),
    )


def smo_solve(K, y, C, tol, max_iter):
    """Sequential minimal optimisation for a binary soft-margin SVM.

    ``K`` is the precomputed symmetric kernel matrix, ``y`` holds +1/-1 labels.  Uses
    maximal-violating-pair working-set selection and stops once the
    violation drops below ``tol`` or after ``max_iter`` pair updates.
    Returns ``(alpha, b, n_iter)``.
    """
    n = K.shape[0]
    y = np.asarray(y, dtype=np.float64)
    alpha = np.zeros(n)
    grad = -np.ones(n)  # gradient of the dual objective 1/2 a'Qa - e'a
    diagK = np.diag(K).copy()
    n_iter = 0
    while n_iter < max_iter:
        yg = -y * grad
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
        if not up.any() or not low.any():
            break
        i = int(np.argmax(np.where(up, yg, -np.inf)))
        j = int(np.argmin(np.where(low, yg, np.inf)))
        if yg[i] - yg[j] < tol:
            break
        n_iter += 1
        eta = diagK[i] + diagK[j] - 2.0 * K[i, j]
        if eta <= 1e-12:
            eta = 1e-12
        ai_old, aj_old = alpha[i], alpha[j]
        # move along y_i*d_i = -y_j*d_j, clipped to the box
        step = (yg[i] - yg[j]) / eta
        if y[i] > 0:
            step = min(step, C - ai_old)
        else:
            step = min(step, ai_old)
        if y[j] > 0:
            step = min(step, aj_old)
        else:
            step = min(step, C - aj_old)
        alpha[i] = ai_old + y[i] * step
        alpha[j] = aj_old - y[j] * step
        dai = alpha[i] - ai_old
        daj = alpha[j] - aj_old
        grad += y * (K[i] * (y[i] * dai) + K[j] * (y[j] * daj))
    b = _smo_bias(alpha, y, grad, C)
    return alpha, b, n_iter


def _smo_bias(alpha, y, grad, C):
    yg = -y * grad
    free = (alpha > 0) & (alpha < C)
    if free.any():
        return float(np.mean(yg[free]))
    up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
    low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
    hi = np.max(yg[up]) if up.any() else 0.0
    lo = np.min(yg[low]) if low.any() else 0.0
    return float((hi + lo) / 2.0)
