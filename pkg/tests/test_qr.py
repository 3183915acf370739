from hypothesis import given, settings, strategies as st
import numpy as np
import pytest

from malbarcode.barcode.matrix import ModuleMatrix
from malbarcode.barcode.qr import (
    _data_positions,
    byte_capacity,
    penalty_score,
    qr_encode,
    qr_self_decode,
    smallest_version,
    symbol_size,
)
from malbarcode.errors import CapacityError, CorruptionError, ParameterError, StructureError
from malbarcode.pipeline import pinned_qr_version
from malbarcode.preprocess import payload_length


def test_golden_symbols_match(qr_golden):
    for sym in qr_golden:
        payload = bytes.fromhex(sym["payload_hex"])
        m = qr_encode(payload)
        assert m.version == sym["version"]
        assert m.meta["mask"] == sym["mask"]
        assert m.to_strings() == sym["rows"]


def test_golden_symbols_decode(qr_golden):
    for sym in qr_golden:
        m = ModuleMatrix.from_strings(sym["rows"])
        assert qr_self_decode(m) == bytes.fromhex(sym["payload_hex"])


def test_hello_world_is_version_1():
    m = qr_encode(b"HELLO WORLD")
    assert m.size == 21 and m.version == 1


def test_byte_capacities_level_l():
    assert [byte_capacity(v) for v in (1, 2, 3, 4, 10, 40)] == [17, 32, 53, 78, 271, 2953]


def test_ten_features_pin_version_4():
    assert payload_length(10, 4) == 69
    assert pinned_qr_version(10) == 4
    assert symbol_size(4) == 33


def test_pinned_version_too_small_reports_required_version():
    with pytest.raises(CapacityError) as info:
        qr_encode(b"x" * 69, version=3)
    assert info.value.required_version == 4


def test_payload_beyond_version_40_rejected():
    with pytest.raises(CapacityError):
        smallest_version(2954)


def test_bad_arguments():
    with pytest.raises(ParameterError):
        qr_encode(b"a", ec_level="Z")
    with pytest.raises(ParameterError):
        qr_encode(b"a", version=41)


def test_forced_mask_never_beats_automatic_choice():
    auto = qr_encode(b"mask check payload")
    best = penalty_score(auto.bits)
    for m in range(8):
        assert penalty_score(qr_encode(b"mask check payload", mask=m).bits) >= best


def test_version_7_plus_carries_version_information():
    m = qr_encode(b"v" * 200)
    assert m.version >= 7
    assert qr_self_decode(m) == b"v" * 200


@settings(max_examples=60, deadline=None)
@given(st.binary(max_size=300))
def test_round_trip(payload):
    assert qr_self_decode(qr_encode(payload)) == payload


@settings(max_examples=30, deadline=None)
@given(st.binary(min_size=1, max_size=120), st.data())
def test_flipped_data_module_detected(payload, data):
    m = qr_encode(payload)
    rows, cols = _data_positions(m.version)
    k = data.draw(st.integers(0, len(rows) - 1))
    bad = m.copy()
    bad.bits[rows[k], cols[k]] ^= True
    with pytest.raises((CorruptionError, StructureError)):
        qr_self_decode(bad)


def test_damaged_finder_is_structural():
    m = qr_encode(b"finder")
    m.bits[3, 3] ^= True
    with pytest.raises(StructureError):
        qr_self_decode(m)


def test_wrong_size_is_structural():
    with pytest.raises(StructureError):
        qr_self_decode(np.zeros((22, 22), dtype=bool))
