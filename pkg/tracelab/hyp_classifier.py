"""Character-tuple predicates for hypergeometric sums and the monodromy /
automorphism predictions built on them."""
from __future__ import annotations

import json
import logging
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from math import gcd
from typing import Dict, FrozenSet, Iterable, Optional, Tuple

from .errors import NotDisjoint, PrimeTooSmall
from .field_core import MultCharacter
from .trace_fns import CharTuplePair

logger = logging.getLogger(__name__)

G0_TRIVIAL = "trivial"
G0_SL = "SL"
G0_SO = "SO"
G0_SP = "Sp"

FLAG_PRIME_CONDITION = "p-divisibility side condition not evaluated"
FLAG_DISCONNECTED = "G != G0 (|n-m| = 1)"
FLAG_CARVE_OUT = "r in {7,8,9} with |n-m| = 6: no prediction"
FLAG_INDUCED = "induced pair: no prediction"
FLAG_AUT_SHAPE = "(n, m) outside the automorphism statement"


class Autt(str, Enum):
    EMPTY = "Empty"
    SPECIAL_INVOLUTION_NEGATION = "SpecialInvolutionNegation"
    SUBSET_OF_GAMMA = "SubsetOfGamma"


@dataclass(frozen=True)
class HypClassification:
    disjoint: bool
    kummer_d: FrozenSet[int]
    belyi: FrozenSet[Tuple[int, int]]
    inverse_belyi: FrozenSet[Tuple[int, int]]
    lambda_: Optional[MultCharacter]
    g0_candidates: FrozenSet[str]
    autt: Autt
    flags: Tuple[str, ...] = ()

    def to_dict(self) -> Dict:
        return {
            "disjoint": self.disjoint,
            "kummer_d": sorted(self.kummer_d),
            "belyi": sorted(list(ab) for ab in self.belyi),
            "inverse_belyi": sorted(list(ab) for ab in self.inverse_belyi),
            "lambda": None if self.lambda_ is None else self.lambda_.a,
            "g0_candidates": sorted(self.g0_candidates),
            "autt": self.autt.value,
            "flags": list(self.flags),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _full_fibers(exps: Iterable[int], d: int, modulus: int) -> bool:
    """The multiset is a union of whole fibers of chi -> chi^d, each fiber uniform."""
    step = modulus // d
    counts = Counter(exps)
    for a in {e % step for e in counts}:
        members = [counts.get(a + j * step, 0) for j in range(d)]
        if len(set(members)) != 1:
            return False
    return True


def is_kummer_induced(pair: CharTuplePair, d: int) -> bool:
    if d < 2 or gcd(pair.n, pair.m) % d:
        return False
    if pair.modulus % d:
        return False
    return _full_fibers(pair.chi_exponents, d, pair.modulus) and _full_fibers(
        pair.rho_exponents, d, pair.modulus
    )


def kummer_degrees(pair: CharTuplePair) -> FrozenSet[int]:
    g = gcd(pair.n, pair.m)
    return frozenset(d for d in range(2, g + 1) if is_kummer_induced(pair, d))


def _roots(target: int, k: int, modulus: int) -> Counter:
    """Exponents x with k x = target (mod modulus)."""
    g = gcd(k, modulus)
    if target % g:
        return Counter()
    step = modulus // g
    x0 = (target // g) * pow(k // g, -1, step) % step if step > 1 else 0
    return Counter((x0 + j * step) % modulus for j in range(g))


def is_belyi_induced(pair: CharTuplePair, a: int, b: int) -> bool:
    n = pair.n
    if n != pair.m or a < 1 or b < 1 or a + b != n:
        return False
    mod = pair.modulus
    chi = Counter(pair.chi_exponents)
    rho = Counter(pair.rho_exponents)
    alphas = {a * e % mod for e in chi}
    betas = {b * e % mod for e in chi} - {0}
    for alpha in alphas:
        for beta in betas:
            if _roots(alpha, a, mod) + _roots(beta, b, mod) != chi:
                continue
            if _roots(alpha + beta, n, mod) == rho:
                return True
    return False


def is_inverse_belyi_induced(pair: CharTuplePair, a: int, b: int) -> bool:
    return is_belyi_induced(pair.conj_swap(), a, b)


def belyi_shapes(pair: CharTuplePair, inverse: bool = False) -> FrozenSet[Tuple[int, int]]:
    test = is_inverse_belyi_induced if inverse else is_belyi_induced
    if pair.n != pair.m:
        return frozenset()
    return frozenset((a, pair.n - a) for a in range(1, pair.n) if test(pair, a, pair.n - a))


def _closed_under_negation(exps: Tuple[int, ...], modulus: int) -> bool:
    return Counter(exps) == Counter((-e) % modulus for e in exps)


def is_inversion_invariant(pair: CharTuplePair) -> bool:
    """chi ~ conj chi and rho ~ conj rho as multisets."""
    mod = pair.modulus
    return _closed_under_negation(pair.chi_exponents, mod) and _closed_under_negation(pair.rho_exponents, mod)


def inversion_twist(pair: CharTuplePair) -> Optional[MultCharacter]:
    """Some Lambda with Lambda conj(chi) ~ chi and Lambda conj(rho) ~ rho, if any."""
    mod = pair.modulus
    chi, rho = pair.chi_exponents, pair.rho_exponents
    anchor = chi or rho
    for lam in sorted({(anchor[0] + e) % mod for e in anchor}):
        if Counter((lam - e) % mod for e in chi) == Counter(chi) and Counter(
            (lam - e) % mod for e in rho
        ) == Counter(rho):
            return MultCharacter(lam, mod)
    return None


def is_inversion_invariant_up_to_twist(pair: CharTuplePair) -> bool:
    return inversion_twist(pair) is not None


def lambda_character(pair: CharTuplePair) -> MultCharacter:
    """prod chi_i conj(rho_i), for n = m."""
    return MultCharacter(sum(pair.chi_exponents) - sum(pair.rho_exponents), pair.modulus)


def predict(pair: CharTuplePair, p: int) -> HypClassification:
    if not pair.is_disjoint():
        raise NotDisjoint(f"characters shared between chi and rho: {pair}")
    n, m = pair.n, pair.m
    r = max(n, m)
    flags = []
    kummer = kummer_degrees(pair)
    belyi = belyi_shapes(pair)
    inv_belyi = belyi_shapes(pair, inverse=True)
    lam = None

    if n == m:
        lam = lambda_character(pair)
        if kummer or belyi or inv_belyi:
            candidates = frozenset()
            flags.append(FLAG_INDUCED)
        elif lam.is_trivial:
            candidates = frozenset({G0_SL, G0_SP})
        elif (lam ** 2).is_trivial:
            candidates = frozenset({G0_TRIVIAL, G0_SO, G0_SL})
        else:
            candidates = frozenset({G0_TRIVIAL, G0_SL})
        autt = Autt.SUBSET_OF_GAMMA
    else:
        if p <= 2 * r + 1:
            raise PrimeTooSmall(f"p={p} must exceed 2 max(n, m) + 1 = {2 * r + 1}")
        flags.append(FLAG_PRIME_CONDITION)
        invariant = is_inversion_invariant(pair)
        if kummer:
            candidates = frozenset()
            flags.append(FLAG_INDUCED)
        elif (n - m) % 2:
            candidates = frozenset({G0_SL})
            if abs(n - m) == 1:
                flags.append(FLAG_DISCONNECTED)
        elif r in (7, 8, 9) and abs(n - m) == 6:
            candidates = frozenset()
            flags.append(FLAG_CARVE_OUT)
        elif invariant:
            # 反転不変で n-m 偶数なら自己双対
            candidates = frozenset({G0_SO, G0_SP})
        else:
            candidates = frozenset({G0_SL, G0_SO, G0_SP})

        if r < 2 or (n, m) in ((1, 2), (2, 1)):
            autt = Autt.EMPTY
            flags.append(FLAG_AUT_SHAPE)
        elif (n - m) % 2 and invariant:
            autt = Autt.SPECIAL_INVOLUTION_NEGATION
        else:
            autt = Autt.EMPTY

    for flag in flags:
        if flag in (FLAG_CARVE_OUT, FLAG_INDUCED):
            logger.warning("%s: %s", pair, flag)
    return HypClassification(
        disjoint=True,
        kummer_d=kummer,
        belyi=belyi,
        inverse_belyi=inv_belyi,
        lambda_=lam,
        g0_candidates=candidates,
        autt=autt,
        flags=tuple(flags),
    )
