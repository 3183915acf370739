from hypothesis import given, settings, strategies as st
import numpy as np
import pytest

from malbarcode import _kernels_py as py_impl
from malbarcode import kernels
from malbarcode.barcode.qr import qr_encode

try:
    from malbarcode import _kernels as c_impl
except ImportError:
    c_impl = None

needs_compiled = pytest.mark.skipif(c_impl is None, reason="compiled kernels not built")


def test_backend_flag():
    assert kernels.BACKEND in ("cython", "python")


def test_penalty_of_known_symbol():
    # total penalty of the mask-3 "HELLO WORLD" symbol, matching the reference encoder's choice
    grid = qr_encode(b"HELLO WORLD").bits
    scores = [py_impl.qr_penalty(qr_encode(b"HELLO WORLD", mask=m).bits.astype(np.uint8)) for m in range(8)]
    assert int(np.argmin(scores)) == 3
    assert py_impl.qr_penalty(grid.astype(np.uint8)) == min(scores)


def test_penalty_rule_values_on_tiny_grids():
    light = np.zeros((21, 21), dtype=np.uint8)
    # runs: 42 lines of 21 -> 42 * 19; blocks: 400 * 3; finder-like: none; balance: 0% dark -> 100
    assert py_impl.qr_penalty(light) == 42 * 19 + 400 * 3 + 100


def test_splitmix_reference_values():
    # first outputs of splitmix64 seeded with 0
    state, a = py_impl.splitmix64(0)
    _, b = py_impl.splitmix64(state)
    assert (a, b) == (0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4)


@needs_compiled
@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([21, 25, 29, 33, 45]))
def test_penalty_backends_agree(seed, size):
    g = (np.random.default_rng(seed).random((size, size)) < 0.5).astype(np.uint8)
    assert c_impl.qr_penalty(g) == py_impl.qr_penalty(g)


@needs_compiled
@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 1), st.integers(1, 6), st.integers(2, 4))
def test_tree_backends_agree(seed, criterion, d, k):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 120))
    X = np.round(rng.normal(size=(n, d)), 1)
    y = rng.integers(0, k, n)
    idx = rng.integers(0, n, n)
    mf = int(rng.integers(1, d + 1))
    a = c_impl.build_tree(X, y, idx, k, mf, criterion, seed)
    b = py_impl.build_tree(X, y, idx, k, mf, criterion, seed)
    for u, v in zip(a, b):
        assert np.array_equal(u, v)


@needs_compiled
@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.1, 10.0))
def test_smo_backends_agree(seed, C):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(60, 3))
    y = np.where(X[:, 0] + 0.5 * rng.normal(size=60) > 0, 1.0, -1.0)
    if abs(y.sum()) == 60:
        y[0] = -y[0]
    K = np.exp(-0.5 * ((X[:, None] - X[None]) ** 2).sum(-1))
    K = (K + K.T) / 2
    a = c_impl.smo_solve(K, y, C, 1e-3, 10**5)
    b = py_impl.smo_solve(K, y, C, 1e-3, 10**5)
    assert np.array_equal(a[0], b[0]) and a[1] == b[1] and a[2] == b[2]
