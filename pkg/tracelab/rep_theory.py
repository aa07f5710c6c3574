"""Multiplicity of the trivial representation in std^m (x) dual(std)^n for
Sp(2g) and SL(r), by Brauer-Klimyk tensoring and by Weyl constant terms."""
from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, Iterator, List, Tuple

from .errors import CapExceeded, TraceLabError

logger = logging.getLogger(__name__)

TENSOR_CAP = 12
PARAMETER_CAP = 8
ORACLE_DEGREE_CAP = 80

Weight = Tuple[int, ...]
Laurent = Dict[Tuple[int, ...], int]


@dataclass(frozen=True, order=True)
class GroupLabel:
    family: str  # "Sp" or "SL"
    parameter: int

    def __post_init__(self) -> None:
        family = {"sp": "Sp", "sl": "SL"}.get(str(self.family).lower())
        if family is None:
            raise TraceLabError(f"unknown group family '{self.family}'")
        object.__setattr__(self, "family", family)
        if self.parameter < 2:
            raise TraceLabError(f"{family} parameter must be at least 2")
        if family == "Sp" and self.parameter % 2:
            raise TraceLabError(f"Sp parameter must be even, got {self.parameter}")

    @classmethod
    def sp(cls, n: int) -> "GroupLabel":
        return cls("Sp", n)

    @classmethod
    def sl(cls, r: int) -> "GroupLabel":
        return cls("SL", r)

    @property
    def is_symplectic(self) -> bool:
        return self.family == "Sp"

    @property
    def lie_rank(self) -> int:
        return self.parameter // 2 if self.is_symplectic else self.parameter - 1

    @property
    def dimension(self) -> int:
        """Dimension of the standard representation."""
        return self.parameter

    def __str__(self) -> str:
        return f"{self.family}({self.parameter})"


@dataclass
class DominantWeightMultiset:
    """Highest weights with multiplicities.

    Sp(2g): nonincreasing nonnegative g-tuples.  SL(r): the first r-1 GL_r
    coordinates of a nonincreasing r-tuple whose last coordinate is 0.
    """

    group: GroupLabel
    weights: Dict[Weight, int] = field(default_factory=dict)

    @classmethod
    def trivial(cls, group: GroupLabel) -> "DominantWeightMultiset":
        return cls(group, {(0,) * group.lie_rank: 1})

    def multiplicity(self, weight: Weight) -> int:
        return self.weights.get(tuple(weight), 0)

    def items(self) -> Iterator[Tuple[Weight, int]]:
        return iter(self.weights.items())

    def tensor_standard(self, dual: bool = False) -> "DominantWeightMultiset":
        step = _sp_step if self.group.is_symplectic else _sl_step
        out: Dict[Weight, int] = defaultdict(int)
        for lam, mult in self.weights.items():
            for mu, sign in step(lam, self.group, dual):
                out[mu] += sign * mult
        return DominantWeightMultiset(self.group, {w: m for w, m in out.items() if m})


def _inversions(v: List[int]) -> int:
    return sum(1 for i in range(len(v)) for j in range(i + 1, len(v)) if v[i] < v[j])


def _sl_step(lam: Weight, group: GroupLabel, dual: bool) -> Iterator[Tuple[Weight, int]]:
    r = group.parameter
    full = list(lam) + [0]
    rho = list(range(r - 1, -1, -1))
    delta = -1 if dual else 1
    for i in range(r):
        v = [full[j] + rho[j] + (delta if j == i else 0) for j in range(r)]
        if len(set(v)) < r:
            continue  # 壁に乗る項は捨てる
        sign = -1 if _inversions(v) % 2 else 1
        mu = [x - y for x, y in zip(sorted(v, reverse=True), rho)]
        yield tuple(x - mu[-1] for x in mu[:-1]), sign


def _sp_step(lam: Weight, group: GroupLabel, dual: bool) -> Iterator[Tuple[Weight, int]]:
    g = group.lie_rank
    rho = list(range(g, 0, -1))
    for i in range(g):
        for delta in (1, -1):
            v = [lam[j] + rho[j] + (delta if j == i else 0) for j in range(g)]
            absv = [abs(x) for x in v]
            if 0 in absv or len(set(absv)) < g:
                continue
            sign = -1 if (sum(1 for x in v if x < 0) + _inversions(absv)) % 2 else 1
            yield tuple(x - y for x, y in zip(sorted(absv, reverse=True), rho)), sign


def _check_caps(group: GroupLabel, m: int, n: int, cap: int) -> None:
    if m < 0 or n < 0:
        raise TraceLabError("tensor exponents must be nonnegative")
    if m + n > cap:
        raise CapExceeded(f"m+n={m + n} exceeds the tensor cap {cap}")
    if group.parameter > PARAMETER_CAP:
        raise CapExceeded(f"{group} exceeds the parameter cap {PARAMETER_CAP}")


@lru_cache(maxsize=None)
def _decomposition(group: GroupLabel, m: int, n: int) -> DominantWeightMultiset:
    if m == 0 and n == 0:
        return DominantWeightMultiset.trivial(group)
    if m > 0:
        return _decomposition(group, m - 1, n).tensor_standard()
    return _decomposition(group, m, n - 1).tensor_standard(dual=True)


def trivial_multiplicity(group: GroupLabel, m: int, n: int, cap: int = TENSOR_CAP) -> int:
    """Multiplicity of the trivial representation in std^m (x) dual(std)^n."""
    _check_caps(group, m, n, cap)
    if group.is_symplectic:
        m, n = m + n, 0
    return _decomposition(group, m, n).multiplicity((0,) * group.lie_rank)


# --- Weyl constant-term oracle -------------------------------------------

def _laurent_mul(f: Laurent, g: Laurent) -> Laurent:
    out: Dict[Tuple[int, ...], int] = defaultdict(int)
    for e1, c1 in f.items():
        for e2, c2 in g.items():
            out[tuple(x + y for x, y in zip(e1, e2))] += c1 * c2
    return {e: c for e, c in out.items() if c}


def _unit(nvars: int, i: int, power: int) -> Tuple[int, ...]:
    return tuple(power if j == i else 0 for j in range(nvars))


def _standard_character(group: GroupLabel, dual: bool) -> Laurent:
    if group.is_symplectic:
        g = group.lie_rank
        return {
            **{_unit(g, i, 1): 1 for i in range(g)},
            **{_unit(g, i, -1): 1 for i in range(g)},
        }
    r = group.parameter
    return {_unit(r, i, -1 if dual else 1): 1 for i in range(r)}


@lru_cache(maxsize=None)
def _character_power(group: GroupLabel, m: int, n: int) -> Tuple[Tuple[Tuple[int, ...], int], ...]:
    nvars = group.lie_rank if group.is_symplectic else group.parameter
    if m == 0 and n == 0:
        return (((0,) * nvars, 1),)
    if m > 0:
        prev, step = _character_power(group, m - 1, n), _standard_character(group, False)
    else:
        prev, step = _character_power(group, m, n - 1), _standard_character(group, True)
    return tuple(_laurent_mul(dict(prev), step).items())


@lru_cache(maxsize=None)
def _weyl_denominator(group: GroupLabel) -> Tuple[Tuple[Tuple[int, ...], int], ...]:
    """Product of (1 - e^{-alpha}) over the positive roots."""
    if group.is_symplectic:
        nvars = group.lie_rank
        roots = [_unit(nvars, i, 1) for i in range(nvars)]
        roots = [tuple(2 * x for x in e) for e in roots]
        for i in range(nvars):
            for j in range(i + 1, nvars):
                roots.append(tuple(1 if k in (i, j) else 0 for k in range(nvars)))
                roots.append(tuple(1 if k == i else (-1 if k == j else 0) for k in range(nvars)))
    else:
        nvars = group.parameter
        roots = [
            tuple(1 if k == i else (-1 if k == j else 0) for k in range(nvars))
            for i in range(nvars)
            for j in range(i + 1, nvars)
        ]
    poly: Laurent = {(0,) * nvars: 1}
    for alpha in roots:
        poly = _laurent_mul(poly, {(0,) * nvars: 1, tuple(-x for x in alpha): -1})
    return tuple(poly.items())


def weyl_constant_term_oracle(group: GroupLabel, m: int, n: int) -> int:
    """Same quantity as ``trivial_multiplicity``, read off as the coefficient
    of the invariant weight in char * prod(1 - e^{-alpha})."""
    if m < 0 or n < 0:
        raise TraceLabError("tensor exponents must be nonnegative")
    if (m + n) * group.parameter > ORACLE_DEGREE_CAP:
        raise CapExceeded(f"degree {(m + n) * group.parameter} exceeds the oracle cap {ORACLE_DEGREE_CAP}")
    if group.is_symplectic:
        m, n = m + n, 0
        target = (0,) * group.lie_rank
    else:
        r = group.parameter
        if (m - n) % r:
            return 0
        target = ((m - n) // r,) * r
    chi = dict(_character_power(group, m, n))
    total = 0
    for d, c in _weyl_denominator(group):
        total += c * chi.get(tuple(t - x for t, x in zip(target, d)), 0)
    return total
