"""PGL_2(F_p): canonical elements, fractional-linear action with poles, sum
patterns and small coset utilities."""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from itertools import product
from typing import Iterable, List, Optional, Sequence, Set, Tuple, Union

import numpy as np

from .errors import (
    ContextMismatch,
    LengthMismatch,
    NotASubgroup,
    PrimeTooSmall,
    SingularMatrix,
    TraceLabError,
)
from .field_core import FieldContext


class Pole(Enum):
    POLE = "pole"

    def __repr__(self) -> str:
        return "POLE"


POLE = Pole.POLE


class Sigma(str, Enum):
    ID = "id"
    CONJ = "conj"

    @classmethod
    def parse(cls, text: Union[str, "Sigma"]) -> "Sigma":
        if isinstance(text, Sigma):
            return text
        key = str(text).strip().lower()
        if key in ("1", "id", "identity"):
            return cls.ID
        if key in ("c", "conj", "bar"):
            return cls.CONJ
        raise TraceLabError(f"unknown conjugation flag '{text}'")


@dataclass(frozen=True, order=True)
class Pgl2Element:
    """Matrix (a b; c d) over F_p, scaled so the first nonzero entry is 1."""

    a: int
    b: int
    c: int
    d: int
    p: int

    def __post_init__(self) -> None:
        p = self.p
        a, b, c, d = (int(v) % p for v in (self.a, self.b, self.c, self.d))
        if (a * d - b * c) % p == 0:
            raise SingularMatrix(f"matrix [[{a},{b}],[{c},{d}]] is singular mod {p}")
        # 最初の非零成分を 1 に正規化
        lead = next(v for v in (a, b, c, d) if v)
        s = pow(lead, -1, p)
        for name, v in zip("abcd", (a, b, c, d)):
            object.__setattr__(self, name, v * s % p)

    @classmethod
    def from_matrix(cls, m: Sequence[Sequence[int]], p: int) -> "Pgl2Element":
        if len(m) != 2 or any(len(row) != 2 for row in m):
            raise TraceLabError(f"expected a 2x2 matrix, got {m!r}")
        return cls(m[0][0], m[0][1], m[1][0], m[1][1], p)

    def matrix(self) -> Tuple[Tuple[int, int], Tuple[int, int]]:
        return ((self.a, self.b), (self.c, self.d))

    def _same_field(self, other: "Pgl2Element") -> None:
        if other.p != self.p:
            raise ContextMismatch(f"elements over F_{self.p} and F_{other.p}")

    def __mul__(self, other: "Pgl2Element") -> "Pgl2Element":
        self._same_field(other)
        return Pgl2Element(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
            self.p,
        )

    def inverse(self) -> "Pgl2Element":
        return Pgl2Element(self.d, -self.b, -self.c, self.a, self.p)

    @property
    def is_identity(self) -> bool:
        return (self.a, self.b, self.c, self.d) == (1, 0, 0, 1)

    def act(self, x: int) -> Union[int, Pole]:
        p = self.p
        x %= p
        den = (self.c * x + self.d) % p
        if den == 0:
            return POLE
        return (self.a * x + self.b) * pow(den, -1, p) % p

    def act_all(self, ctx: FieldContext) -> np.ndarray:
        """gamma.x for every x in F_p; poles are reported as -1."""
        if ctx.p != self.p:
            raise ContextMismatch(f"element over F_{self.p} used with p={ctx.p}")
        xs = np.arange(ctx.p, dtype=np.int64)
        num = (self.a * xs + self.b) % ctx.p
        den = (self.c * xs + self.d) % ctx.p
        out = num * ctx.inv[den] % ctx.p
        out[den == 0] = -1  # 極
        return out

    def __str__(self) -> str:
        return f"[[{self.a},{self.b}],[{self.c},{self.d}]]"


# 基本的な元

def act(gamma: Pgl2Element, x: int) -> Union[int, Pole]:
    return gamma.act(x)


def identity(p: int) -> Pgl2Element:
    return Pgl2Element(1, 0, 0, 1, p)


def diag(a: int, d: int, p: int) -> Pgl2Element:
    return Pgl2Element(a, 0, 0, d, p)


def translation(b: int, p: int) -> Pgl2Element:
    return Pgl2Element(1, b, 0, 1, p)


def negation(p: int) -> Pgl2Element:
    """x -> -x, the special involution of odd-rank Kloosterman sheaves."""
    return diag(-1, 1, p)


def is_involution(gamma: Pgl2Element) -> bool:
    return (gamma * gamma).is_identity


def gamma_group(p: int) -> Set[Pgl2Element]:
    """The six transformations permuting {0, 1, infinity}."""
    if p <= 3:
        raise PrimeTooSmall(f"the six-element group needs p > 3, got {p}")
    mats = [
        ((1, 0), (0, 1)),
        ((0, 1), (1, 0)),
        ((-1, 1), (0, 1)),
        ((0, 1), (-1, 1)),
        ((1, 0), (1, -1)),
        ((1, -1), (1, 0)),
    ]
    return {Pgl2Element.from_matrix(m, p) for m in mats}


def is_subgroup(elements: Iterable[Pgl2Element]) -> bool:
    h = set(elements)
    if not h:
        return False
    return all(x * y in h for x, y in product(h, h))


def coset_structure_check(h: Iterable[Pgl2Element], t: Iterable[Pgl2Element]) -> bool:
    """True iff T is empty or T = xi H with xi normalizing H and xi^2 in H."""
    h = set(h)
    t = set(t)
    if not is_subgroup(h):
        raise NotASubgroup("H is not closed under multiplication")
    if not t:
        return True
    for xi in t:
        if {xi * g for g in h} != t:
            continue
        xi_inv = xi.inverse()
        if all(xi * g * xi_inv in h for g in h) and xi * xi in h:
            return True
    return False


# 行列リストのパース

def parse_matrix_list(text: str) -> List[List[List[int]]]:
    """Parse "[[a,b],[c,d]],[[...]]" into integer matrices."""
    text = text.strip()
    if not text:
        return []
    try:
        raw = json.loads(f"[{text}]")
    except json.JSONDecodeError as e:
        raise TraceLabError(f"cannot parse matrices '{text}': {e.msg}") from e
    for m in raw:
        if (
            not isinstance(m, list)
            or len(m) != 2
            or any(not isinstance(row, list) or len(row) != 2 for row in m)
            or any(not isinstance(v, int) for row in m for v in row)
        ):
            raise TraceLabError(f"not a 2x2 integer matrix: {json.dumps(m)}")
    return raw


def parse_matrices(text: str, p: int) -> List[Pgl2Element]:
    return [Pgl2Element.from_matrix(m, p) for m in parse_matrix_list(text)]


@dataclass(frozen=True, eq=False)
class SumPattern:
    """(gammas, sigmas, h); identity ignores simultaneous reordering."""

    gammas: Tuple[Pgl2Element, ...]
    sigmas: Tuple[Sigma, ...]
    h: int = 0

    def __post_init__(self) -> None:
        gammas = tuple(self.gammas)
        sigmas = tuple(Sigma.parse(s) for s in self.sigmas)
        if not gammas:
            raise TraceLabError("a sum pattern needs at least one element")
        if len(gammas) != len(sigmas):
            raise LengthMismatch(f"{len(gammas)} gammas but {len(sigmas)} flags")
        p = gammas[0].p
        if any(g.p != p for g in gammas):
            raise ContextMismatch("pattern mixes different primes")
        object.__setattr__(self, "gammas", gammas)
        object.__setattr__(self, "sigmas", sigmas)
        object.__setattr__(self, "h", int(self.h) % p)

    @classmethod
    def of(cls, gammas: Sequence[Pgl2Element], sigmas: Optional[Sequence] = None, h: int = 0) -> "SumPattern":
        if sigmas is None:
            sigmas = [Sigma.ID] * len(gammas)
        return cls(tuple(gammas), tuple(sigmas), h)

    @property
    def p(self) -> int:
        return self.gammas[0].p

    @property
    def k(self) -> int:
        return len(self.gammas)

    def pairs(self) -> List[Tuple[Pgl2Element, Sigma]]:
        return list(zip(self.gammas, self.sigmas))

    def key(self) -> Tuple:
        return (tuple(sorted(self.pairs())), self.h, self.p)

    def multiplicities(self) -> Counter:
        return Counter(self.gammas)

    def permuted(self, order: Sequence[int]) -> "SumPattern":
        return SumPattern(
            tuple(self.gammas[i] for i in order),
            tuple(self.sigmas[i] for i in order),
            self.h,
        )

    def with_sigmas(self, sigmas: Sequence[Sigma]) -> "SumPattern":
        return SumPattern(self.gammas, tuple(sigmas), self.h)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, SumPattern) and self.key() == other.key()

    def __hash__(self) -> int:
        return hash(self.key())

    def __repr__(self) -> str:
        body = ", ".join(f"{g}^{s.value}" for g, s in self.pairs())
        return f"SumPattern({body}; h={self.h})"


@dataclass(frozen=True)
class PatternSpec:
    """Integer description of a pattern, reduced at each prime."""

    id: str
    matrices: Tuple[Tuple[Tuple[int, int], Tuple[int, int]], ...]
    sigmas: Tuple[Sigma, ...] = ()
    h: int = 0

    def __post_init__(self) -> None:
        mats = tuple(tuple(tuple(int(v) for v in row) for row in m) for m in self.matrices)
        sigmas = tuple(Sigma.parse(s) for s in self.sigmas) or (Sigma.ID,) * len(mats)
        if len(sigmas) != len(mats):
            raise LengthMismatch(f"pattern {self.id}: {len(mats)} matrices but {len(sigmas)} flags")
        object.__setattr__(self, "matrices", mats)
        object.__setattr__(self, "sigmas", sigmas)

    def at(self, p: int) -> SumPattern:
        gammas = tuple(Pgl2Element.from_matrix(m, p) for m in self.matrices)
        return SumPattern(gammas, self.sigmas, self.h)
