"""Cancellation / main-term classification of sum patterns."""
from __future__ import annotations

import json
import logging
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Optional, Sequence, Tuple

from .errors import NotInvolution, PrimeTooSmall, ProfileMismatch, TraceLabError
from .pgl2 import Pgl2Element, Sigma, SumPattern, is_involution, negation
from .rep_theory import GroupLabel, trivial_multiplicity

logger = logging.getLogger(__name__)

FLAG_CONJ_NORMALIZED = "conj-normalized"
FLAG_TWIST = "character-twist possible"
FLAG_PRODUCT = "product-of-multiplicities"


@dataclass(frozen=True)
class SheafProfile:
    symmetry: GroupLabel
    special_involution: Optional[Pgl2Element] = None
    rank: Optional[int] = None
    arithmetic_equals_geometric: bool = True
    involution_untwisted: bool = False
    conductor_bound: Optional[int] = None

    def __post_init__(self) -> None:
        if self.rank is None:
            object.__setattr__(self, "rank", self.symmetry.dimension)
        if self.rank != self.symmetry.dimension:
            raise TraceLabError(f"rank {self.rank} does not match {self.symmetry}")
        if not self.symmetry.is_symplectic and self.symmetry.parameter < 3:
            raise TraceLabError("SL profiles need r >= 3; use Sp(2) for rank 2")
        xi = self.special_involution
        if xi is not None:
            if self.symmetry.is_symplectic:
                raise TraceLabError("a special involution only applies to SL profiles")
            if xi.is_identity or not is_involution(xi):
                raise NotInvolution(f"{xi} is not a nontrivial involution")

    @classmethod
    def parse(cls, text: str, p: int) -> "SheafProfile":
        """Parse "sp:2", "sl:3" or "sl:3:neg" (negation as special involution)."""
        parts = [s.strip().lower() for s in text.split(":")]
        if len(parts) not in (2, 3) or parts[0] not in ("sp", "sl"):
            raise TraceLabError(f"bad profile '{text}'")
        try:
            param = int(parts[1])
        except ValueError as e:
            raise TraceLabError(f"bad profile parameter in '{text}'") from e
        xi = None
        untwisted = False
        if len(parts) == 3:
            if parts[2] != "neg":
                raise TraceLabError(f"unknown involution '{parts[2]}' in '{text}'")
            xi = negation(p)
            untwisted = True
        return cls(GroupLabel(parts[0], param), xi, involution_untwisted=untwisted)

    @property
    def r(self) -> int:
        return self.symmetry.parameter

    def describe(self) -> str:
        s = str(self.symmetry)
        if self.special_involution is not None:
            s += f" xi={self.special_involution}"
        return s


class PredictionKind(str, Enum):
    CANCELLATION = "Cancellation"
    MAIN_TERM = "MainTerm"


@dataclass(frozen=True)
class Prediction:
    kind: PredictionKind
    m: Optional[int] = None
    reason: str = ""
    flags: Tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if (self.kind == PredictionKind.MAIN_TERM) != (self.m is not None):
            raise TraceLabError("m is defined exactly for main-term predictions")
        if self.m is not None and self.m < 1:
            raise TraceLabError(f"main-term multiplicity must be positive, got {self.m}")

    @property
    def is_main_term(self) -> bool:
        return self.kind == PredictionKind.MAIN_TERM

    def to_dict(self) -> Dict:
        return {"kind": self.kind.value, "m": self.m, "reason": self.reason, "flags": list(self.flags)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def __str__(self) -> str:
        if self.is_main_term:
            return f"MainTerm m={self.m}"
        return "Cancellation"


def _check_lengths(gammas: Sequence, sigmas: Sequence) -> None:
    if len(gammas) != len(sigmas):
        raise TraceLabError(f"{len(gammas)} gammas but {len(sigmas)} flags")


def is_normal(gammas: Sequence[Pgl2Element]) -> bool:
    """Some element occurs an odd number of times."""
    return any(c % 2 for c in Counter(gammas).values())


def is_r_normal(gammas: Sequence[Pgl2Element], sigmas: Sequence[Sigma], r: int) -> bool:
    _check_lengths(gammas, sigmas)
    counts = Counter(zip(gammas, (Sigma.parse(s) for s in sigmas)))
    return any(
        (counts[(g, Sigma.ID)] - counts[(g, Sigma.CONJ)]) % r
        for g in set(gammas)
    )


def fold_counts(
    gammas: Sequence[Pgl2Element], sigmas: Sequence[Sigma], xi: Pgl2Element
) -> Dict[Pgl2Element, Tuple[int, int]]:
    """Folded counts (n1, nc) per class {gamma, xi*gamma}, keyed by its smaller member.

    n1 = #(gamma, id) + #(xi gamma, conj), nc = #(gamma, conj) + #(xi gamma, id).
    """
    _check_lengths(gammas, sigmas)
    counts = Counter(zip(gammas, (Sigma.parse(s) for s in sigmas)))
    out: Dict[Pgl2Element, Tuple[int, int]] = {}
    for g in set(gammas):
        rep = min(g, xi * g)
        if rep in out:
            continue
        other = xi * rep
        n1 = counts[(rep, Sigma.ID)] + counts[(other, Sigma.CONJ)]
        nc = counts[(rep, Sigma.CONJ)] + counts[(other, Sigma.ID)]
        out[rep] = (n1, nc)
    return out


def is_r_normal_wrt(
    gammas: Sequence[Pgl2Element], sigmas: Sequence[Sigma], r: int, xi: Pgl2Element
) -> bool:
    if not is_involution(xi):
        raise NotInvolution(f"{xi} is not an involution")
    return any((n1 - nc) % r for n1, nc in fold_counts(gammas, sigmas, xi).values())


def classify(pattern: SumPattern, profile: SheafProfile, p: int, strict: bool = False) -> Prediction:
    """Cancellation or main term for ``pattern`` under ``profile``."""
    flags = []
    if not profile.arithmetic_equals_geometric:
        flags.append(FLAG_TWIST)
    xi = profile.special_involution

    if profile.symmetry.is_symplectic:
        if any(s == Sigma.CONJ for s in pattern.sigmas):
            if strict:
                raise ProfileMismatch("conjugation flags under a self-dual Sp profile")
            logger.warning("conj flags normalized to id under %s", profile.describe())
            pattern = pattern.with_sigmas([Sigma.ID] * pattern.k)
            flags.append(FLAG_CONJ_NORMALIZED)
    elif xi is not None and p <= profile.r and not profile.involution_untwisted:
        raise PrimeTooSmall(f"p={p} must exceed r={profile.r} when the involution twist is unknown")

    if pattern.h != 0:
        return Prediction(PredictionKind.CANCELLATION, reason="h-nonzero", flags=tuple(flags))

    if profile.symmetry.is_symplectic:
        if is_normal(pattern.gammas):
            return Prediction(PredictionKind.CANCELLATION, reason="normal", flags=tuple(flags))
        m = 1
        for count in pattern.multiplicities().values():
            m *= trivial_multiplicity(profile.symmetry, count, 0)
        flags.append(FLAG_PRODUCT)
        return Prediction(PredictionKind.MAIN_TERM, m=m, reason="not normal", flags=tuple(flags))

    r = profile.r
    if xi is None:
        if is_r_normal(pattern.gammas, pattern.sigmas, r):
            return Prediction(PredictionKind.CANCELLATION, reason="r-normal", flags=tuple(flags))
        counts = Counter(pattern.pairs())
        pairs = [(counts[(g, Sigma.ID)], counts[(g, Sigma.CONJ)]) for g in set(pattern.gammas)]
        reason = "not r-normal"
    else:
        if is_r_normal_wrt(pattern.gammas, pattern.sigmas, r, xi):
            return Prediction(PredictionKind.CANCELLATION, reason="r-normal wrt xi", flags=tuple(flags))
        # xi で移り合う元をまとめて数える
        pairs = list(fold_counts(pattern.gammas, pattern.sigmas, xi).values())
        reason = "not r-normal wrt xi"

    m = 1
    for n1, nc in pairs:
        m *= trivial_multiplicity(profile.symmetry, n1, nc)
    flags.append(FLAG_PRODUCT)
    return Prediction(PredictionKind.MAIN_TERM, m=m, reason=reason, flags=tuple(flags))
