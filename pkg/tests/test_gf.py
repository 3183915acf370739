from hypothesis import given, strategies as st
import pytest

from malbarcode.barcode.gf import generator_poly, get_field, rs_encode, syndromes
from malbarcode.errors import FieldRangeError, ParameterError

GF256 = get_field(256)
elements = st.integers(0, 255)
nonzero = st.integers(1, 255)


@given(elements, elements, elements)
def test_multiplication_is_associative_and_distributes(a, b, c):
    f = GF256
    assert f.mul(f.mul(a, b), c) == f.mul(a, f.mul(b, c))
    assert f.mul(a, b ^ c) == f.mul(a, b) ^ f.mul(a, c)


@given(nonzero)
def test_inverse(a):
    assert GF256.mul(a, GF256.inv(a)) == 1
    assert GF256.div(a, a) == 1


def test_alpha_generates_the_whole_group():
    for order in (16, 64, 256, 1024, 4096):
        f = get_field(order)
        assert len({f.pow_alpha(k) for k in range(order - 1)}) == order - 1


def test_known_qr_parity_block():
    # worked 1-M example: "HELLO WORLD" data codewords and their 10 check words
    data = [32, 91, 11, 120, 209, 114, 220, 77, 67, 64, 236, 17, 236, 17, 236, 17]
    assert rs_encode(data, 10, GF256) == [196, 35, 39, 119, 235, 215, 231, 226, 93, 23]


def test_generator_poly_degree_and_roots():
    gen = generator_poly(7, GF256)
    assert len(gen) == 8 and gen[0] == 1
    for i in range(7):
        assert GF256.poly_eval(gen, GF256.pow_alpha(i)) == 0


@given(st.lists(elements, min_size=1, max_size=40), st.integers(2, 20), st.integers(0, 1))
def test_codeword_has_zero_syndromes(data, n_parity, first_root):
    parity = rs_encode(data, n_parity, GF256, first_root)
    assert not any(syndromes(data + parity, n_parity, GF256, first_root))


@given(st.lists(elements, min_size=1, max_size=40), st.integers(2, 20), st.data())
def test_single_symbol_error_gives_nonzero_syndrome(data, n_parity, draw):
    word = data + rs_encode(data, n_parity, GF256)
    pos = draw.draw(st.integers(0, len(word) - 1))
    word[pos] ^= draw.draw(nonzero)
    assert any(syndromes(word, n_parity, GF256))


def test_out_of_field_values_rejected():
    with pytest.raises(FieldRangeError):
        rs_encode([0, 256], 4, GF256)
    with pytest.raises(FieldRangeError):
        rs_encode([16], 4, get_field(16))


def test_parity_count_must_be_positive():
    with pytest.raises(ParameterError):
        rs_encode([1, 2], 0, GF256)
