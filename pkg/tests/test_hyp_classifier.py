import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tracelab.errors import NotDisjoint, PrimeTooSmall
from tracelab.field_core import build_context
from tracelab.hyp_classifier import (
    FLAG_AUT_SHAPE,
    FLAG_CARVE_OUT,
    FLAG_DISCONNECTED,
    FLAG_INDUCED,
    FLAG_PRIME_CONDITION,
    G0_SL,
    G0_SO,
    G0_SP,
    G0_TRIVIAL,
    Autt,
    belyi_shapes,
    inversion_twist,
    is_belyi_induced,
    is_inverse_belyi_induced,
    is_inversion_invariant,
    is_inversion_invariant_up_to_twist,
    is_kummer_induced,
    kummer_degrees,
    lambda_character,
    predict,
)
from tracelab.trace_fns import CharTuplePair, hyp_batch


def pair(p, chi, rho=()):
    return CharTuplePair.from_exponents(build_context(p), chi, rho)


def test_kummer_examples():
    assert not any(is_kummer_induced(pair(101, [0, 0, 0, 0]), d) for d in (2, 3, 4))
    roots = pair(101, [7, 57])
    assert is_kummer_induced(roots, 2)
    assert kummer_degrees(roots) == frozenset({2})
    assert not is_kummer_induced(pair(101, [7, 57, 3]), 2)
    assert not is_kummer_induced(pair(101, [7, 57], [1]), 2)


def test_kummer_construction_round_trip():
    # every square root of a fixed character pair, listed once
    chi = [5, 55, 12, 62]
    rho = [3, 53]
    assert is_kummer_induced(pair(101, chi, rho), 2)


BELYI = pair(31, [5, 8, 23], [7, 17, 27])


def test_belyi_constructed_example():
    assert BELYI.is_disjoint()
    assert is_belyi_induced(BELYI, 1, 2)
    assert (1, 2) in belyi_shapes(BELYI)
    assert is_inverse_belyi_induced(BELYI.conj_swap(), 1, 2)


def test_belyi_rejections():
    assert not is_belyi_induced(pair(31, [1, 2], [3]), 1, 1)
    assert not is_belyi_induced(BELYI, 1, 1)
    # beta would have to be trivial
    assert not is_belyi_induced(pair(31, [0, 0], [0, 15]), 1, 1)


@given(st.permutations([5, 8, 23]), st.permutations([7, 17, 27]))
def test_belyi_is_order_independent(chi, rho):
    assert is_belyi_induced(pair(31, chi, rho), 1, 2)
    assert is_inverse_belyi_induced(pair(31, chi, rho).conj_swap(), 1, 2)


def test_inversion_invariance_readings():
    plain = pair(31, [1, 29], [0, 15])
    assert is_inversion_invariant(plain)
    twisted = pair(31, [1, 3])
    assert not is_inversion_invariant(twisted)
    assert is_inversion_invariant_up_to_twist(twisted)
    assert inversion_twist(twisted).a == 4
    assert not is_inversion_invariant_up_to_twist(pair(31, [1, 2, 4]))


def test_lambda_character():
    assert lambda_character(pair(31, [1, 2], [0, 3])).is_trivial
    assert lambda_character(pair(31, [1], [16])).a == 15


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_kloosterman_tuples(n):
    result = predict(pair(101, [0] * n), 101)
    assert result.disjoint
    assert result.kummer_d == frozenset()
    if n % 2:
        assert result.g0_candidates == frozenset({G0_SL})
        assert result.autt == Autt.SPECIAL_INVOLUTION_NEGATION
    else:
        assert result.g0_candidates == frozenset({G0_SO, G0_SP})
        assert result.autt == Autt.EMPTY
    assert FLAG_PRIME_CONDITION in result.flags


def test_square_case_refinements():
    assert predict(pair(31, [1, 2], [0, 3]), 31).g0_candidates == frozenset({G0_SL, G0_SP})
    assert predict(pair(31, [1], [16]), 31).g0_candidates == frozenset({G0_TRIVIAL, G0_SO, G0_SL})
    result = predict(pair(31, [1], [2]), 31)
    assert result.g0_candidates == frozenset({G0_TRIVIAL, G0_SL})
    assert result.autt == Autt.SUBSET_OF_GAMMA
    assert result.lambda_.a == 29


def test_induced_pairs_get_no_prediction():
    result = predict(BELYI, 31)
    assert result.g0_candidates == frozenset()
    assert FLAG_INDUCED in result.flags
    assert (1, 2) in result.belyi
    kummer = predict(pair(101, [7, 57]), 101)
    assert kummer.g0_candidates == frozenset()
    assert kummer.kummer_d == frozenset({2})


def test_shape_flags():
    result = predict(pair(31, [1, 2], [3]), 31)
    assert result.g0_candidates == frozenset({G0_SL})
    assert FLAG_DISCONNECTED in result.flags
    assert FLAG_AUT_SHAPE in result.flags
    assert result.autt == Autt.EMPTY
    carve = predict(pair(31, [1, 2, 3, 4, 5, 6, 7], [11]), 31)
    assert carve.g0_candidates == frozenset()
    assert FLAG_CARVE_OUT in carve.flags


def test_odd_difference_needs_invariance():
    assert predict(pair(101, [1, 2, 4]), 101).autt == Autt.EMPTY
    assert predict(pair(101, [0, 1, 99]), 101).autt == Autt.SPECIAL_INVOLUTION_NEGATION


def test_errors():
    with pytest.raises(NotDisjoint):
        predict(pair(31, [1], [1]), 31)
    with pytest.raises(PrimeTooSmall):
        predict(pair(7, [0, 0, 0]), 7)


def test_json_output():
    data = json.loads(predict(pair(101, [0, 0, 0]), 101).to_json())
    assert data["g0_candidates"] == ["SL"]
    assert data["autt"] == "SpecialInvolutionNegation"
    assert data["lambda"] is None


def _negation_correlation(table):
    p = table.p
    t = np.arange(1, p)
    good = table.regular_mask[t] & table.regular_mask[(-t) % p]
    return complex(np.sum(table.values[t][good] * table.values[(-t) % p][good]))


@pytest.mark.parametrize("p", [31, 61])
@pytest.mark.parametrize(
    "chi, rho, autt",
    [
        ([0, 1, -1], [], Autt.SPECIAL_INVOLUTION_NEGATION),
        ([0, 0, 0], [], Autt.SPECIAL_INVOLUTION_NEGATION),
        ([1, 2, 4], [], Autt.EMPTY),
        ([0, 0], [], Autt.EMPTY),
    ],
)
def test_negation_correlation_matches_autt(p, chi, rho, autt):
    ctx = build_context(p)
    pair = CharTuplePair.from_exponents(ctx, chi, rho)
    assert predict(pair, p).autt == autt
    value = abs(_negation_correlation(hyp_batch(ctx, pair)))
    if autt == Autt.SPECIAL_INVOLUTION_NEGATION:
        assert value >= p / 2
    else:
        assert value <= 10 * math.sqrt(p)
