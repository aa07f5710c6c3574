import pytest

from tracelab.errors import CapExceeded, TraceLabError
from tracelab.rep_theory import (
    DominantWeightMultiset,
    GroupLabel,
    trivial_multiplicity,
    weyl_constant_term_oracle,
)

CATALAN = [1, 1, 2, 5, 14, 42]


def test_group_label():
    assert str(GroupLabel("sp", 4)) == "Sp(4)"
    assert GroupLabel.sl(3).lie_rank == 2
    assert GroupLabel.sp(6).lie_rank == 3
    with pytest.raises(TraceLabError):
        GroupLabel("Sp", 3)
    with pytest.raises(TraceLabError):
        GroupLabel("SO", 3)


@pytest.mark.parametrize(
    "group, m, n, expected",
    [
        (GroupLabel.sl(3), 1, 1, 1),
        (GroupLabel.sl(5), 1, 1, 1),
        (GroupLabel.sl(3), 1, 0, 0),
        (GroupLabel.sl(3), 3, 0, 1),
        (GroupLabel.sl(3), 2, 2, 2),
        (GroupLabel.sl(3), 3, 3, 6),
        (GroupLabel.sl(2), 2, 0, 1),
        (GroupLabel.sp(2), 3, 0, 0),
        (GroupLabel.sp(2), 4, 0, 2),
        (GroupLabel.sp(4), 2, 0, 1),
        (GroupLabel.sp(2), 1, 1, 1),
    ],
)
def test_known_multiplicities(group, m, n, expected):
    assert trivial_multiplicity(group, m, n) == expected
    assert weyl_constant_term_oracle(group, m, n) == expected


@pytest.mark.parametrize("k", range(6))
def test_sp2_catalan(k):
    assert trivial_multiplicity(GroupLabel.sp(2), 2 * k, 0) == CATALAN[k]


GRID = [GroupLabel.sp(2), GroupLabel.sp(4), GroupLabel.sp(6)] + [GroupLabel.sl(r) for r in (2, 3, 4, 5)]


@pytest.mark.parametrize("group", GRID, ids=str)
def test_algorithms_agree(group):
    for total in range(11):
        for m in range(total + 1):
            assert trivial_multiplicity(group, m, total - m) == weyl_constant_term_oracle(
                group, m, total - m
            ), (group, m, total - m)


@pytest.mark.parametrize("r", [2, 3, 4, 5])
def test_sl_divisibility_rule(r):
    group = GroupLabel.sl(r)
    for m in range(9):
        for n in range(9 - m):
            value = trivial_multiplicity(group, m, n)
            assert (value > 0) == ((m - n) % r == 0), (r, m, n)


@pytest.mark.parametrize("group", GRID, ids=str)
def test_sp_parity_and_monotonicity(group):
    for m in range(5):
        for n in range(5):
            value = trivial_multiplicity(group, m, n)
            if group.is_symplectic and (m + n) % 2:
                assert value == 0
            assert trivial_multiplicity(group, m + 1, n + 1) >= value


def test_caps():
    with pytest.raises(CapExceeded):
        trivial_multiplicity(GroupLabel.sp(2), 13, 0)
    with pytest.raises(CapExceeded):
        trivial_multiplicity(GroupLabel.sl(9), 1, 1)
    with pytest.raises(CapExceeded):
        weyl_constant_term_oracle(GroupLabel.sl(8), 6, 5)
    with pytest.raises(TraceLabError):
        trivial_multiplicity(GroupLabel.sl(3), -1, 0)


def test_tensor_standard_dimensions():
    # std (x) std = Sym^2 + Lambda^2 for SL(3): highest weights (2, 0) and (1, 1)
    group = GroupLabel.sl(3)
    square = DominantWeightMultiset.trivial(group).tensor_standard().tensor_standard()
    assert dict(square.items()) == {(2, 0): 1, (1, 1): 1}
