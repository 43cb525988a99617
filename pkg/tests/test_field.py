"""Field arithmetic against independent polynomial oracles."""

from itertools import product

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from relcommit.field import (
    DEFAULT_POLYS,
    FieldError,
    FieldSpec,
    is_irreducible,
    xmod,
)

GF8 = FieldSpec(3, 0b1011)


def oracle_mul(a, b, poly):
    """Schoolbook polynomial product, then long-division remainder."""
    prod = 0
    for i in range(a.bit_length()):
        if (a >> i) & 1:
            prod ^= b << i
    deg = poly.bit_length() - 1
    while prod.bit_length() > deg:
        prod ^= poly << (prod.bit_length() - poly.bit_length())
    return prod


def oracle_inv(a, spec):
    """Exhaustive search for the element with a*u = 1."""
    for u in range(1, spec.order):
        if oracle_mul(a, u, spec.poly) == 1:
            return u
    raise AssertionError(f"no inverse for {a}")


def oracle_irreducible(poly):
    deg = poly.bit_length() - 1
    return deg >= 1 and all(
        xmod(poly, q) != 0 for q in range(2, 1 << (deg // 2 + 1)))


def test_add_is_xor():
    assert GF8.add_i(0b101, 0b010) == 0b111
    assert GF8.add_i(0b111, 0b101) == 0b010


def test_add_self_inverse():
    for a in range(8):
        assert GF8.add_i(a, a) == 0


def test_mul_worked_examples():
    assert GF8.mul_i(0b110, 0b011) == 0b001
    assert GF8.mul_i(0b011, 0b101) == 0b100


def test_mul_matches_oracle_exhaustively():
    for n in (1, 2, 3, 4):
        spec = FieldSpec.default(n)
        for a in range(spec.order):
            for b in range(spec.order):
                assert spec.mul_i(a, b) == oracle_mul(a, b, spec.poly)


def test_mul_identity():
    for spec in (GF8, FieldSpec.default(8)):
        for a in range(spec.order):
            assert spec.mul_i(a, 1) == a


def test_inv_worked_examples():
    assert GF8.inv_i(1) == 1
    assert GF8.inv_i(0b010) == 0b101
    assert GF8.inv_i(0b011) == 0b110


def test_inv_matches_exhaustive_search():
    for n in (1, 2, 3, 4):
        spec = FieldSpec.default(n)
        for a in range(1, spec.order):
            assert spec.inv_i(a) == oracle_inv(a, spec)


def test_inv_of_zero_rejected():
    with pytest.raises(FieldError):
        GF8.inv_i(0)


def test_irreducibility_examples():
    assert is_irreducible(0b1011)          # x^3+x+1
    assert not is_irreducible(0b101)       # x^2+1 = (x+1)^2
    assert is_irreducible(0x11B)           # x^8+x^4+x^3+x+1


def test_distributivity_exhaustive():
    for n in (1, 2, 3, 4):
        spec = FieldSpec.default(n)
        for a, b, c in product(range(spec.order), repeat=3):
            assert spec.mul_i(a ^ b, c) == spec.mul_i(a, c) ^ spec.mul_i(b, c)


def test_nonzero_elements_form_group_exhaustive():
    for n in (1, 2, 3, 4):
        spec = FieldSpec.default(n)
        for a in range(1, spec.order):
            assert spec.mul_i(a, spec.inv_i(a)) == 1


def test_frobenius_exhaustive():
    for n in (1, 2, 3, 4):
        spec = FieldSpec.default(n)
        for a in range(spec.order):
            assert spec.pow_i(a, spec.order) == a


@settings(max_examples=60)
@given(st.integers(0, 2**16 - 1), st.integers(0, 2**16 - 1), st.integers(0, 2**16 - 1))
def test_distributivity_randomized_large_field(a, b, c):
    spec = FieldSpec.default(16)
    assert spec.mul_i(a ^ b, c) == spec.mul_i(a, c) ^ spec.mul_i(b, c)


@settings(max_examples=60)
@given(st.integers(1, 2**16 - 1))
def test_inverse_randomized_large_field(a):
    spec = FieldSpec.default(16)
    assert spec.mul_i(a, spec.inv_i(a)) == 1


def test_default_polys_are_smallest_irreducible():
    for n in range(1, 11):
        poly = DEFAULT_POLYS[n]
        assert oracle_irreducible(poly)
        for smaller in range(1 << n, poly):
            assert not oracle_irreducible(smaller)


def test_default_polys_cover_all_supported_widths():
    for n in range(1, 25):
        spec = FieldSpec.default(n)
        assert spec.poly == DEFAULT_POLYS[n]


def test_spec_rejects_reducible_poly():
    with pytest.raises(FieldError):
        FieldSpec(2, 0b101)


def test_spec_rejects_wrong_degree_and_large_n():
    with pytest.raises(FieldError):
        FieldSpec(3, 0b10011)
    with pytest.raises(FieldError):
        FieldSpec(25, 1 << 25 | 0b11011)


def test_element_arithmetic_and_spec_mismatch():
    a = GF8.element(0b101)
    b = GF8.element(0b010)
    assert (a + b).bits == 0b111
    assert (a * b).bits == GF8.mul_i(0b101, 0b010)
    assert b.inv().bits == 0b101
    assert (a ** GF8.order).bits == a.bits
    other = FieldSpec(3, 0b1101)
    with pytest.raises(FieldError):
        a + other.element(1)
    with pytest.raises(FieldError):
        a * other.element(1)


def test_element_range_checked():
    with pytest.raises(FieldError):
        GF8.element(8)
    with pytest.raises(FieldError):
        GF8.element(-1)


def test_hex_serialization():
    assert GF8.to_hex(0b101) == "5"
    assert FieldSpec.default(8).to_hex(0x2A) == "2a"
    assert FieldSpec.default(12).to_hex(0xABC) == "abc"
    spec = FieldSpec.default(9)
    assert spec.to_hex(1) == "001"
    assert spec.from_hex("1ff") == 0x1FF
    with pytest.raises(FieldError):
        spec.from_hex("200")
