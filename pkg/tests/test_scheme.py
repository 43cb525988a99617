"""Scheme operations: worked traces, opening rules, eligibility, composition."""

import random
from itertools import product

import pytest

from relcommit.field import FieldSpec
from relcommit.scheme import (
    BOT,
    Commitment,
    SchemeParams,
    check_eligible,
    chsh_descriptor,
    chsh_response,
    compose,
    extr,
    extr_bit,
    extr_bit_i,
    extr_i,
    k_of_extr,
    multiround_descriptor,
    multiround_verify,
    restrict_domain,
)

GF8 = FieldSpec(3, 0b1011)


def el(v, spec=GF8):
    return spec.element(v)


def test_chsh_response_worked_example():
    assert chsh_response(el(0b001), el(0b101), el(0b010)).bits == 0b111


def test_chsh_response_degenerate_inputs():
    for s in range(8):
        assert chsh_response(el(s), el(0b110), el(0)).bits == 0b110
    for a in range(8):
        assert chsh_response(el(0), el(0b110), el(a)).bits == 0b110


def test_extr_worked_example():
    c = Commitment(el(0b010), el(0b111))
    assert extr(el(0b101), c) == 0b001


def test_extr_zero_challenge_rules():
    c = Commitment(el(0), el(0b011))
    assert extr(el(0b011), c) == 0
    assert extr(el(0b100), c) is BOT


def test_extr_inverts_honest_response():
    for n in (1, 2, 3):
        spec = FieldSpec.default(n)
        for s, r, a in product(range(spec.order), repeat=3):
            if a == 0:
                continue
            x = r ^ spec.mul_i(a, s)
            assert extr_i(spec, r, a, x) == s


def test_extr_bit_cases():
    a, x = el(0b011), el(0b110)
    c = Commitment(a, x)
    assert extr_bit(el(0b110), c) == 0
    assert extr_bit(el(0b101), c) == 1
    assert extr_bit(el(0b001), c) is BOT


def test_extr_bit_agrees_with_restricted_extr():
    for n in (1, 2, 3):
        spec = FieldSpec.default(n)
        for a, x, y in product(range(spec.order), repeat=3):
            bit = extr_bit_i(spec, y, a, x)
            restricted = restrict_domain(extr_i(spec, y, a, x), 1, spec.n)
            assert bit == restricted


def test_restrict_domain():
    assert restrict_domain(0b001, 1, 3) == 1
    assert restrict_domain(0b101, 1, 3) is BOT
    assert restrict_domain(BOT, 1, 3) is BOT
    assert restrict_domain(0b011, 2, 3) == 0b011
    with pytest.raises(ValueError):
        restrict_domain(1, 0, 3)


def test_extr_is_bijection_in_y_for_nonzero_challenge():
    for n in (1, 2, 3, 4):
        spec = FieldSpec.default(n)
        for a in range(1, spec.order):
            for x in range(spec.order):
                seen = {extr_i(spec, y, a, x) for y in range(spec.order)}
                assert seen == set(range(spec.order))


def test_k_of_extr_is_one_for_chsh():
    for n in (1, 2, 3):
        assert k_of_extr(FieldSpec.default(n)) == 1


def test_k_of_extr_toy_fixture():
    def sloppy_extr(spec, y, a, x):
        # Collapses the low bit of y, so two strings open to each value.
        return extr_i(spec, y & ~1, a, x)

    assert k_of_extr(FieldSpec.default(2), sloppy_extr) == 2


def test_k_of_extr_refuses_large_fields():
    with pytest.raises(ValueError):
        k_of_extr(FieldSpec.default(9))


def test_multiround_verify_worked_trace():
    params = SchemeParams(GF8, m=1)
    assert multiround_verify(params, [0b010, 0b011], [0b111, 0b000], 0b100) == 0b001


def test_multiround_verify_tampered_opening():
    params = SchemeParams(GF8, m=1)
    assert multiround_verify(params, [0b010, 0b011], [0b111, 0b000], 0b000) == 0b110


def test_multiround_verify_m0_is_extr():
    params = SchemeParams(GF8, m=0)
    for a, x, y in product(range(8), repeat=3):
        assert multiround_verify(params, [a], [x], y) == extr_i(GF8, y, a, x)


def test_multiround_verify_zero_challenge_propagation():
    params = SchemeParams(GF8, m=1)
    # a_1 = 0 with x_1 = y_1: canonical 0 continues downward.
    assert multiround_verify(params, [0b010, 0], [0b111, 0b100], 0b100) == \
        extr_i(GF8, 0, 0b010, 0b111)
    # a_1 = 0 with x_1 != y_1: rejection.
    assert multiround_verify(params, [0b010, 0], [0b111, 0b100], 0b101) is BOT


def test_multiround_verify_length_mismatch():
    params = SchemeParams(GF8, m=1)
    with pytest.raises(ValueError):
        multiround_verify(params, [1], [1, 2], 0)


def test_honest_roundtrip_exhaustive_small():
    rng = random.Random(7)
    for n, m in ((1, 1), (2, 2), (3, 1)):
        spec = FieldSpec.default(n)
        params = SchemeParams(spec, m=m)
        nonzero = range(1, spec.order)
        for challenges in product(nonzero, repeat=m + 1):
            for s in range(spec.order):
                pads = [rng.randrange(spec.order) for _ in range(m + 1)]
                responses = []
                for i, a in enumerate(challenges):
                    prev = s if i == 0 else pads[i - 1]
                    responses.append(pads[i] ^ spec.mul_i(a, prev))
                assert multiround_verify(params, challenges, responses, pads[m]) == s


def test_honest_roundtrip_exhaustive_n3_m2_sampled_pads():
    spec = FieldSpec.default(3)
    params = SchemeParams(spec, m=2)
    rng = random.Random(11)
    for challenges in product(range(1, 8), repeat=3):
        s = rng.randrange(8)
        pads = [rng.randrange(8) for _ in range(3)]
        responses = [pads[0] ^ spec.mul_i(challenges[0], s)]
        for i in (1, 2):
            responses.append(pads[i] ^ spec.mul_i(challenges[i], pads[i - 1]))
        assert multiround_verify(params, challenges, responses, pads[2]) == s


def test_commitment_requires_single_field():
    with pytest.raises(ValueError):
        Commitment(el(1), FieldSpec(3, 0b1101).element(1))


def test_params_validation():
    with pytest.raises(ValueError):
        SchemeParams(GF8, m=-1)
    with pytest.raises(ValueError):
        SchemeParams(GF8, domain_bits=4)
    with pytest.raises(ValueError):
        SchemeParams(GF8, first_committer="R")


def test_eligibility_chsh_pairs():
    spec = FieldSpec.default(3)
    chsh = chsh_descriptor(spec, "P")
    xchsh = chsh_descriptor(spec, "Q")
    ok, _ = check_eligible(chsh, xchsh)
    assert ok
    ok, reason = check_eligible(chsh, chsh)
    assert not ok and "commits via" in reason
    composed = compose(chsh, xchsh)
    ok, _ = check_eligible(xchsh, composed)
    assert ok
    # A composed scheme cannot sit on the left: its opening is interactive
    # and involves both provers.
    ok, reason = check_eligible(composed, chsh)
    assert not ok and reason


def test_compose_requires_eligibility():
    spec = FieldSpec.default(3)
    chsh = chsh_descriptor(spec, "P")
    with pytest.raises(ValueError):
        compose(chsh, chsh)


def test_compose_counts_rounds_and_roles():
    spec = FieldSpec.default(3)
    d0 = multiround_descriptor(spec, 0)
    assert d0.sustain_rounds == 0 and d0.name == "chsh"
    d3 = multiround_descriptor(spec, 3)
    assert d3.sustain_rounds == 3
    assert d3.committer == "P"
    # Round 3 is Q's, so the final opening comes from P.
    assert d3.opener == "P"
    d2 = multiround_descriptor(spec, 2)
    assert d2.opener == "Q"


def test_composed_descriptor_matches_direct_params():
    spec = FieldSpec.default(3)
    assert multiround_descriptor(spec, 2).to_params() == SchemeParams(spec, m=2)
    assert multiround_descriptor(spec, 0).to_params() == SchemeParams(spec, m=0)


def test_scheme_config_round_trip():
    from relcommit.scheme import params_from_config, params_to_config
    params = SchemeParams(GF8, m=2, domain_bits=1, first_committer="Q")
    line = params_to_config(params)
    assert line == "scheme=chsh n=3 poly=0xb m=2 domain_bits=1 first_committer=Q"
    assert params_from_config(line) == params
    assert params_from_config("scheme=chsh n=3 m=0 first_committer=P") == \
        SchemeParams(GF8, m=0)
    with pytest.raises(ValueError):
        params_from_config("scheme=pedersen n=3")
