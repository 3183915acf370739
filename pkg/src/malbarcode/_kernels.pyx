# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the kernels in ``_kernels_py``; results are identical."""

import numpy as np
cimport numpy as cnp
from libc.math cimport log
from libc.stdlib cimport free, malloc, qsort
from libc.stdint cimport int64_t, uint64_t

from ._kernels_py import _smo_bias

cnp.import_array()


# ---------------------------------------------------------------- QR penalty

cdef int _line_penalty(const unsigned char[:, :] g, int size, bint transpose) noexcept nogil:
    cdef int i, j, run, score = 0, k
    cdef unsigned char prev, cur
    cdef int w
    cdef bint left_ok, right_ok
    # finder-like pattern 1011101 padded by 0000 on one side
    cdef int pat_left[11]
    cdef int pat_right[11]
    cdef int base[11]
    base[:] = [1, 0, 1, 1, 1, 0, 1, 0, 0, 0, 0]
    for k in range(11):
        pat_left[k] = base[k]
        pat_right[k] = base[10 - k]
    for i in range(size):
        run = 1
        prev = g[0, i] if transpose else g[i, 0]
        for j in range(1, size):
            cur = g[j, i] if transpose else g[i, j]
            if cur == prev:
                run += 1
            else:
                if run >= 5:
                    score += run - 2
                run = 1
                prev = cur
        if run >= 5:
            score += run - 2
        for j in range(size - 10):
            left_ok = True
            right_ok = True
            for w in range(11):
                cur = g[j + w, i] if transpose else g[i, j + w]
                if cur != pat_left[w]:
                    left_ok = False
                if cur != pat_right[w]:
                    right_ok = False
                if not left_ok and not right_ok:
                    break
            if left_ok or right_ok:
                score += 40
    return score


def qr_penalty(grid):
    cdef const unsigned char[:, :] g = np.ascontiguousarray(grid, dtype=np.uint8)
    cdef int size = g.shape[0]
    cdef int i, j, n2 = 0, dark = 0, total, pct
    cdef int n1n3 = _line_penalty(g, size, False) + _line_penalty(g, size, True)
    for i in range(size - 1):
        for j in range(size - 1):
            if g[i, j] == g[i + 1, j] and g[i, j] == g[i, j + 1] and g[i, j] == g[i + 1, j + 1]:
                n2 += 1
    for i in range(size):
        for j in range(size):
            dark += g[i, j] != 0
    total = size * size
    pct = (dark * 20 + total - 1) // total - 10
    return n1n3 + 3 * n2 + 10 * (pct if pct >= 0 else -pct)


# ---------------------------------------------------------------- tree builder

cdef uint64_t MASK64 = 0xFFFFFFFFFFFFFFFF


cdef inline uint64_t _splitmix(uint64_t* state) noexcept nogil:
    cdef uint64_t z
    state[0] = state[0] + <uint64_t>0x9E3779B97F4A7C15
    z = state[0]
    z = (z ^ (z >> 30)) * <uint64_t>0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * <uint64_t>0x94D049BB133111EB
    return z ^ (z >> 31)


ctypedef struct Pair:
    double value
    int64_t label


cdef int _cmp_pair(const void* a, const void* b) noexcept nogil:
    cdef double va = (<Pair*>a).value
    cdef double vb = (<Pair*>b).value
    return (va > vb) - (va < vb)


cdef bint _best_split(const double[:, ::1] X, const int64_t[::1] y, int64_t* idx, Py_ssize_t m,
                      Py_ssize_t f, int n_classes, int criterion, const double* xlogx,
                      Pair* pairs, int64_t* lc, int64_t* tc,
                      double* out_score, double* out_thr) noexcept nogil:
    cdef Py_ssize_t i, c, k
    cdef int64_t nl, nr, v
    cdef double score, best, sl, sr, thr, a, b
    cdef Py_ssize_t best_k = -1
    for i in range(m):
        pairs[i].value = X[idx[i], f]
        pairs[i].label = y[idx[i]]
    qsort(pairs, m, sizeof(Pair), _cmp_pair)
    if pairs[0].value == pairs[m - 1].value:
        return False
    for c in range(n_classes):
        lc[c] = 0
        tc[c] = 0
    for i in range(m):
        tc[pairs[i].label] += 1
    best = 0.0
    for k in range(m - 1):
        lc[pairs[k].label] += 1
        if not pairs[k + 1].value > pairs[k].value:
            continue
        nl = k + 1
        nr = m - nl
        if criterion == 0:
            v = lc[0] * lc[0]
            for c in range(1, n_classes):
                v = v + lc[c] * lc[c]
            sl = <double>v
            v = (tc[0] - lc[0]) * (tc[0] - lc[0])
            for c in range(1, n_classes):
                v = v + (tc[c] - lc[c]) * (tc[c] - lc[c])
            sr = <double>v
            score = -(sl / <double>nl + sr / <double>nr)
        else:
            sl = xlogx[lc[0]]
            for c in range(1, n_classes):
                sl = sl + xlogx[lc[c]]
            sr = xlogx[tc[0] - lc[0]]
            for c in range(1, n_classes):
                sr = sr + xlogx[tc[c] - lc[c]]
            score = (xlogx[nl] + xlogx[nr]) - sl - sr
        if best_k < 0 or score < best:
            best = score
            best_k = k
    a = pairs[best_k].value
    b = pairs[best_k + 1].value
    thr = (a + b) / 2.0
    if thr >= b:
        thr = a
    out_score[0] = best
    out_thr[0] = thr
    return True


def build_tree(X, y, sample_idx, int n_classes, Py_ssize_t max_features, int criterion, seed):
    cdef const double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef const int64_t[::1] yv = np.ascontiguousarray(y, dtype=np.int64)
    cdef int64_t[::1] idx = np.array(sample_idx, dtype=np.int64)
    cdef Py_ssize_t m = idx.shape[0]
    cdef Py_ssize_t d = Xv.shape[1]
    cdef Py_ssize_t cap = 2 * m + 1 if m > 0 else 1
    feature_a = np.full(cap, -1, dtype=np.int64)
    threshold_a = np.zeros(cap, dtype=np.float64)
    left_a = np.full(cap, -1, dtype=np.int64)
    right_a = np.full(cap, -1, dtype=np.int64)
    counts_a = np.zeros((cap, n_classes), dtype=np.int64)
    cdef int64_t[::1] feature = feature_a
    cdef double[::1] threshold = threshold_a
    cdef int64_t[::1] left = left_a
    cdef int64_t[::1] right = right_a
    cdef int64_t[:, ::1] counts = counts_a
    xlogx_a = np.zeros(m + 1, dtype=np.float64)
    cdef double[::1] xlogx = xlogx_a
    cdef Py_ssize_t i, j, t, pos, f, n_nodes = 0, node, start, end, mid, nonzero
    cdef int64_t tmp
    cdef uint64_t state = (<uint64_t>(int(seed) & 0xFFFFFFFFFFFFFFFF))
    cdef uint64_t r
    cdef double score, thr, best_score = 0.0, best_thr = 0.0
    cdef Py_ssize_t best_f
    cdef bint found
    for i in range(1, m + 1):
        xlogx[i] = <double>i * log(<double>i)
    # explicit DFS stack of (start, end, parent, side)
    cdef int64_t* stack = <int64_t*>malloc(4 * (cap + 1) * sizeof(int64_t))
    cdef int64_t* perm = <int64_t*>malloc((d + 1) * sizeof(int64_t))
    cdef Pair* pairs = <Pair*>malloc((m + 1) * sizeof(Pair))
    cdef int64_t* lc = <int64_t*>malloc((n_classes + 1) * sizeof(int64_t))
    cdef int64_t* tc = <int64_t*>malloc((n_classes + 1) * sizeof(int64_t))
    cdef Py_ssize_t sp = 0
    if stack == NULL or perm == NULL or pairs == NULL or lc == NULL or tc == NULL:
        free(stack); free(perm); free(pairs); free(lc); free(tc)
        raise MemoryError()
    try:
        with nogil:
            stack[0] = 0
            stack[1] = m
            stack[2] = -1
            stack[3] = 0
            sp = 1
            while sp > 0:
                sp -= 1
                start = stack[4 * sp]
                end = stack[4 * sp + 1]
                node = n_nodes
                n_nodes += 1
                if stack[4 * sp + 2] >= 0:
                    if stack[4 * sp + 3] == 0:
                        left[stack[4 * sp + 2]] = node
                    else:
                        right[stack[4 * sp + 2]] = node
                for i in range(start, end):
                    counts[node, yv[idx[i]]] += 1
                nonzero = 0
                for j in range(n_classes):
                    if counts[node, j] > 0:
                        nonzero += 1
                if end - start < 2 or nonzero <= 1:
                    continue
                for j in range(d):
                    perm[j] = j
                for j in range(d - 1, 0, -1):
                    r = _splitmix(&state)
                    t = <Py_ssize_t>(r % <uint64_t>(j + 1))
                    tmp = perm[j]
                    perm[j] = perm[t]
                    perm[t] = tmp
                found = False
                for pos in range(d):
                    if pos >= max_features and found:
                        break
                    f = perm[pos]
                    if _best_split(Xv, yv, &idx[start], end - start, f, n_classes, criterion,
                                   &xlogx[0], pairs, lc, tc, &score, &thr):
                        if not found or score < best_score:
                            found = True
                            best_score = score
                            best_thr = thr
                            best_f = f
                if not found:
                    continue
                feature[node] = best_f
                threshold[node] = best_thr
                # partition: rows going left first
                mid = start
                for i in range(start, end):
                    if Xv[idx[i], best_f] <= best_thr:
                        tmp = idx[mid]
                        idx[mid] = idx[i]
                        idx[i] = tmp
                        mid += 1
                # right pushed first so the left child is popped next
                stack[4 * sp] = mid
                stack[4 * sp + 1] = end
                stack[4 * sp + 2] = node
                stack[4 * sp + 3] = 1
                sp += 1
                stack[4 * sp] = start
                stack[4 * sp + 1] = mid
                stack[4 * sp + 2] = node
                stack[4 * sp + 3] = 0
                sp += 1
    finally:
        free(stack); free(perm); free(pairs); free(lc); free(tc)
    return (feature_a[:n_nodes].copy(), threshold_a[:n_nodes].copy(), left_a[:n_nodes].copy(),
            right_a[:n_nodes].copy(), counts_a[:n_nodes].copy())


# ---------------------------------------------------------------- SMO

def smo_solve(K, y, double C, double tol, long max_iter):
    cdef const double[:, ::1] Kv = np.ascontiguousarray(K, dtype=np.float64)
    y_a = np.asarray(y, dtype=np.float64)
    cdef const double[::1] yv = y_a
    cdef Py_ssize_t n = Kv.shape[0]
    alpha_a = np.zeros(n)
    grad_a = -np.ones(n)
    cdef double[::1] alpha = alpha_a
    cdef double[::1] grad = grad_a
    cdef Py_ssize_t t, i, j
    cdef long n_iter = 0
    cdef double yg, gmax, gmin, eta, ai_old, aj_old, step, c1, c2
    cdef bint up, low
    with nogil:
        while n_iter < max_iter:
            i = -1
            j = -1
            gmax = 0.0
            gmin = 0.0
            for t in range(n):
                yg = -yv[t] * grad[t]
                up = (yv[t] > 0 and alpha[t] < C) or (yv[t] < 0 and alpha[t] > 0)
                low = (yv[t] > 0 and alpha[t] > 0) or (yv[t] < 0 and alpha[t] < C)
                if up and (i < 0 or yg > gmax):
                    i = t
                    gmax = yg
                if low and (j < 0 or yg < gmin):
                    j = t
                    gmin = yg
            if i < 0 or j < 0:
                break
            if gmax - gmin < tol:
                break
            n_iter += 1
            eta = Kv[i, i] + Kv[j, j] - 2.0 * Kv[i, j]
            if eta <= 1e-12:
                eta = 1e-12
            ai_old = alpha[i]
            aj_old = alpha[j]
            step = (gmax - gmin) / eta
            if yv[i] > 0:
                step = min(step, C - ai_old)
            else:
                step = min(step, ai_old)
            if yv[j] > 0:
                step = min(step, aj_old)
            else:
                step = min(step, C - aj_old)
            alpha[i] = ai_old + yv[i] * step
            alpha[j] = aj_old - yv[j] * step
            c1 = yv[i] * (alpha[i] - ai_old)
            c2 = yv[j] * (alpha[j] - aj_old)
            for t in range(n):
                grad[t] += yv[t] * (Kv[i, t] * c1 + Kv[j, t] * c2)
    b = _smo_bias(alpha_a, y_a, grad_a, C)
    return alpha_a, b, n_iter
