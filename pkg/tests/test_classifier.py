import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tracelab.classifier import (
    FLAG_CONJ_NORMALIZED,
    FLAG_TWIST,
    Prediction,
    PredictionKind,
    SheafProfile,
    classify,
    fold_counts,
    is_normal,
    is_r_normal,
    is_r_normal_wrt,
)
from tracelab.errors import NotInvolution, PrimeTooSmall, ProfileMismatch, TraceLabError
from tracelab.pgl2 import Sigma, SumPattern, diag, identity, negation, translation
from tracelab.rep_theory import GroupLabel, trivial_multiplicity

P = 101
ID, C = Sigma.ID, Sigma.CONJ
G1 = translation(1, P)
G2 = diag(2, 1, P)
G3 = translation(5, P)
XI = negation(P)


def test_is_normal():
    assert not is_normal([G1, G1])
    assert is_normal([G1, G1, G2])
    assert not is_normal([G1, G1, G2, G2, G3, G3])


def test_is_r_normal():
    assert not is_r_normal([G1, G1, G2, G2], [ID, C, ID, C], 3)
    assert is_r_normal([G1], [ID], 3)
    assert not is_r_normal([G1, G1, G1], [ID, ID, ID], 3)


def test_is_r_normal_wrt_examples():
    xg = XI * G1
    assert xg != G1
    gammas = [G1, xg, xg, G1, G1, xg, G1]
    sigmas = [ID, C, C, C, ID, ID, ID]
    assert not is_r_normal_wrt(gammas, sigmas, 3, XI)
    assert not is_r_normal_wrt([G1, xg], [ID, ID], 3, XI)
    assert is_r_normal_wrt([G1], [ID], 3, XI)
    with pytest.raises(NotInvolution):
        is_r_normal_wrt([G1], [ID], 3, translation(1, P))


@given(
    entries=st.lists(st.tuples(st.integers(1, 50), st.sampled_from([ID, C])), min_size=1, max_size=8),
    r=st.integers(2, 6),
)
@settings(max_examples=60, deadline=None)
def test_folding_without_xi_related_pairs(entries, r):
    # a in 1..50 never meets -a, so no two elements are swapped by x -> -x
    gammas = [diag(a, 1, P) for a, _ in entries]
    sigmas = [s for _, s in entries]
    assert is_r_normal_wrt(gammas, sigmas, r, XI) == is_r_normal(gammas, sigmas, r)


def test_fold_counts_merge_classes():
    xg = XI * G1
    folded = fold_counts([G1, xg, G2], [ID, C, ID], XI)
    rep = min(G1, xg)
    assert folded[rep] == ((2, 0) if rep == G1 else (0, 2))
    assert len(folded) == 2


def test_profile_parse_and_validation():
    prof = SheafProfile.parse("sl:3:neg", P)
    assert prof.special_involution == XI
    assert prof.involution_untwisted
    assert SheafProfile.parse("sp:2", P).symmetry == GroupLabel.sp(2)
    with pytest.raises(TraceLabError):
        SheafProfile.parse("so:3", P)
    with pytest.raises(TraceLabError):
        SheafProfile(GroupLabel.sl(2))
    with pytest.raises(TraceLabError):
        SheafProfile(GroupLabel.sp(2), XI)
    with pytest.raises(NotInvolution):
        SheafProfile(GroupLabel.sl(3), identity(P))


def test_prediction_rendering():
    pred = Prediction(PredictionKind.MAIN_TERM, m=1)
    assert str(pred) == "MainTerm m=1"
    assert str(Prediction(PredictionKind.CANCELLATION)) == "Cancellation"
    assert '"kind": "MainTerm"' in pred.to_json()
    with pytest.raises(TraceLabError):
        Prediction(PredictionKind.CANCELLATION, m=2)


SP2 = SheafProfile(GroupLabel.sp(2))
SL3_NEG = SheafProfile.parse("sl:3:neg", P)


def test_sp_main_terms():
    pred = classify(SumPattern.of([G1, G1, G2, G2]), SP2, P)
    assert pred.kind == PredictionKind.MAIN_TERM and pred.m == 1
    assert classify(SumPattern.of([G1] * 4), SP2, P).m == 2
    assert classify(SumPattern.of([G1, G1]), SP2, P).m == 1


def test_h_nonzero_cancels():
    for profile in (SP2, SL3_NEG, SheafProfile(GroupLabel.sl(3))):
        pred = classify(SumPattern.of([G1, G1], h=1), profile, P)
        assert pred.kind == PredictionKind.CANCELLATION
        assert pred.reason == "h-nonzero"


def test_sp_conj_flags_normalized_or_rejected():
    pattern = SumPattern.of([G1, G1], [ID, C])
    pred = classify(pattern, SP2, P)
    assert pred.m == 1
    assert FLAG_CONJ_NORMALIZED in pred.flags
    with pytest.raises(ProfileMismatch):
        classify(pattern, SP2, P, strict=True)


def test_sl_with_involution():
    xg = XI * G1
    pattern = SumPattern.of([G1, xg, xg, G1, G1, xg, G1], [ID, C, C, C, ID, ID, ID])
    pred = classify(pattern, SL3_NEG, P)
    assert pred.kind == PredictionKind.MAIN_TERM
    assert pred.m == trivial_multiplicity(GroupLabel.sl(3), 5, 2)
    assert pred.m >= 1
    # Kl_3(x) Kl_3(-x) is |Kl_3(x)|^2
    pred = classify(SumPattern.of([identity(P), XI]), SL3_NEG, P)
    assert pred.m == 1
    assert classify(SumPattern.of([G1]), SL3_NEG, P).kind == PredictionKind.CANCELLATION


def test_sl_without_involution():
    profile = SheafProfile(GroupLabel.sl(3))
    assert classify(SumPattern.of([G1, G1], [ID, C]), profile, P).m == 1
    assert classify(SumPattern.of([G1] * 3), profile, P).m == 1
    assert classify(SumPattern.of([G1, G1]), profile, P).kind == PredictionKind.CANCELLATION


def test_prime_too_small_for_twisted_involution():
    profile = SheafProfile(GroupLabel.sl(5), negation(5))
    with pytest.raises(PrimeTooSmall):
        classify(SumPattern.of([identity(5)]), profile, 5)
    untwisted = SheafProfile(GroupLabel.sl(5), negation(5), involution_untwisted=True)
    classify(SumPattern.of([identity(5)]), untwisted, 5)


def test_twist_flag():
    profile = SheafProfile(GroupLabel.sl(3), arithmetic_equals_geometric=False)
    assert FLAG_TWIST in classify(SumPattern.of([G1]), profile, P).flags


ELEMENTS = [G1, G2, G3, XI, identity(P)]


@given(
    data=st.data(),
    idx=st.lists(st.integers(0, len(ELEMENTS) - 1), min_size=1, max_size=6),
    h=st.sampled_from([0, 0, 1]),
)
@settings(max_examples=60, deadline=None)
def test_classify_permutation_invariant(data, idx, h):
    sigmas = data.draw(st.lists(st.sampled_from([ID, C]), min_size=len(idx), max_size=len(idx)))
    pattern = SumPattern.of([ELEMENTS[i] for i in idx], sigmas, h)
    order = data.draw(st.permutations(range(len(idx))))
    for profile in (SL3_NEG, SheafProfile(GroupLabel.sl(3))):
        assert classify(pattern, profile, P) == classify(pattern.permuted(order), profile, P)


@given(idx=st.lists(st.integers(0, len(ELEMENTS) - 1), min_size=1, max_size=6))
@settings(deadline=None)
def test_sp_consistency(idx):
    gammas = [ELEMENTS[i] for i in idx]
    pred = classify(SumPattern.of(gammas), SP2, P)
    if is_normal(gammas):
        assert pred.kind == PredictionKind.CANCELLATION
    else:
        assert pred.kind == PredictionKind.MAIN_TERM and pred.m >= 1


@given(idx=st.lists(st.integers(0, len(ELEMENTS) - 1), min_size=1, max_size=6))
def test_sl_degeneracy(idx):
    gammas = [ELEMENTS[i] for i in idx]
    counts = SumPattern.of(gammas).multiplicities()
    if all(c % 3 for c in counts.values()):
        assert is_r_normal(gammas, [ID] * len(gammas), 3)
