from hypothesis import given, settings, strategies as st
import numpy as np
import pytest

from malbarcode.barcode.aztec import (
    _data_positions,
    aztec_encode,
    aztec_self_decode,
    choose_symbol,
    matrix_size,
    word_size,
)
from malbarcode.barcode.matrix import ModuleMatrix
from malbarcode.errors import CapacityError, CorruptionError, StructureError


def test_golden_symbols_match(aztec_golden):
    for sym in aztec_golden:
        payload = bytes.fromhex(sym["payload_hex"])
        m = aztec_encode(payload)
        assert (m.meta["compact"], m.meta["layers"]) == (sym["compact"], sym["layers"])
        assert m.to_strings() == sym["rows"]


def test_golden_symbols_decode(aztec_golden):
    for sym in aztec_golden:
        m = ModuleMatrix.from_strings(sym["rows"], "aztec")
        assert aztec_self_decode(m) == bytes.fromhex(sym["payload_hex"])


def test_symbol_sizes():
    assert [matrix_size(n, True) for n in (1, 2, 3, 4)] == [15, 19, 23, 27]
    assert matrix_size(1, False) == 19
    assert matrix_size(5, False) == 37
    assert matrix_size(32, False) == 151


def test_word_sizes():
    assert [word_size(n) for n in (1, 2, 3, 8, 9, 22, 23, 32)] == [6, 6, 8, 8, 10, 10, 12, 12]


def test_ten_feature_payload_symbol():
    m = aztec_encode(b"0" * 69)
    assert not m.meta["compact"] and m.meta["layers"] == 5 and m.size == 37


def test_over_capacity_raises():
    with pytest.raises(CapacityError):
        aztec_encode(bytes(2500))


def test_choose_symbol_grows_monotonically():
    sizes = [matrix_size(*reversed(choose_symbol(n)[:2])) for n in (0, 10, 50, 100, 400, 1000)]
    assert sizes == sorted(sizes)


@settings(max_examples=60, deadline=None)
@given(st.binary(max_size=400))
def test_round_trip(payload):
    assert aztec_self_decode(aztec_encode(payload)) == payload


@settings(max_examples=30, deadline=None)
@given(st.binary(min_size=1, max_size=150), st.data())
def test_flipped_data_module_detected(payload, data):
    m = aztec_encode(payload)
    rows, cols = _data_positions(m.meta["layers"], m.meta["compact"])
    k = data.draw(st.integers(0, len(rows) - 1))
    bad = m.copy()
    bad.bits[rows[k], cols[k]] ^= True
    with pytest.raises((CorruptionError, StructureError)):
        aztec_self_decode(bad)


def test_damaged_bullseye_is_structural():
    m = aztec_encode(b"bullseye")
    c = m.size // 2
    m.bits[c, c] ^= True
    with pytest.raises(StructureError):
        aztec_self_decode(m)


def test_even_size_is_structural():
    with pytest.raises(StructureError):
        aztec_self_decode(np.zeros((20, 20), dtype=bool))
