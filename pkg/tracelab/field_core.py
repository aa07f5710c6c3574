"""Prime-field substrate: contexts, multiplicative characters, Gauss sums and
the multiplicative-group DFT.

Functions on F_p^x are stored as arrays of length p-1 indexed by ``x - 1``.
Spectra are indexed by the character exponent ``a`` with
``chi_a(g^k) = e(a k / (p-1))``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache
from math import gcd

import numpy as np
import sympy

from .errors import ContextMismatch, LengthMismatch, NotPrime, TooLarge

logger = logging.getLogger(__name__)

PRIME_CAP = 10**6
# 直接計算に切り替えるサイズ
DIRECT_DFT_THRESHOLD = 48


@dataclass(frozen=True, eq=False)
class FieldContext:
    p: int
    g: int
    dlog: np.ndarray  # dlog[g^k] = k, dlog[0] = -1
    exp: np.ndarray  # exp[k] = g^k mod p
    inv: np.ndarray  # inv[x] = 1/x, inv[0] = 0
    psi_table: np.ndarray  # psi_table[x] = e(x/p)

    @property
    def order(self) -> int:
        return self.p - 1

    def psi(self, x: int) -> complex:
        return complex(self.psi_table[x % self.p])

    def units(self) -> np.ndarray:
        return np.arange(1, self.p, dtype=np.int64)

    def __repr__(self) -> str:
        return f"FieldContext(p={self.p}, g={self.g})"


def is_prime(n: int) -> bool:
    return bool(sympy.isprime(int(n)))


@lru_cache(maxsize=32)
def build_context(p: int, cap: int = PRIME_CAP) -> FieldContext:
    """Build the (cached) context for ``p`` with its smallest primitive root."""
    p = int(p)
    if p < 3 or not is_prime(p):
        raise NotPrime(f"{p} is not an odd prime")
    if p > cap:
        raise TooLarge(f"{p} exceeds the prime cap {cap}")

    g = int(sympy.primitive_root(p))
    order = p - 1
    exp = np.empty(order, dtype=np.int64)
    v = 1
    for k in range(order):
        exp[k] = v
        v = v * g % p
    dlog = np.full(p, -1, dtype=np.int64)
    dlog[exp] = np.arange(order, dtype=np.int64)
    inv = np.zeros(p, dtype=np.int64)
    inv[exp] = exp[(-np.arange(order)) % order]
    psi_table = np.exp(2j * np.pi * np.arange(p) / p)

    for arr in (exp, dlog, inv, psi_table):
        arr.setflags(write=False)
    logger.debug("built context p=%d g=%d", p, g)
    return FieldContext(p=p, g=g, dlog=dlog, exp=exp, inv=inv, psi_table=psi_table)


@dataclass(frozen=True)
class MultCharacter:
    """Multiplicative character chi_a, stored as its exponent modulo p-1."""

    a: int
    modulus: int

    def __post_init__(self) -> None:
        if self.modulus < 1:
            raise ValueError("modulus must be positive")
        object.__setattr__(self, "a", int(self.a) % int(self.modulus))

    @classmethod
    def of(cls, ctx: FieldContext, a: int) -> "MultCharacter":
        return cls(a, ctx.order)

    @classmethod
    def trivial(cls, ctx: FieldContext) -> "MultCharacter":
        return cls(0, ctx.order)

    @property
    def is_trivial(self) -> bool:
        return self.a == 0

    @property
    def order(self) -> int:
        return self.modulus // gcd(self.a, self.modulus)

    @property
    def parity(self) -> int:
        """chi(-1), which is (-1)^a."""
        return -1 if self.a % 2 else 1

    def conj(self) -> "MultCharacter":
        return MultCharacter(-self.a, self.modulus)

    def __mul__(self, other: "MultCharacter") -> "MultCharacter":
        if other.modulus != self.modulus:
            raise ContextMismatch("characters of different moduli")
        return MultCharacter(self.a + other.a, self.modulus)

    def __pow__(self, k: int) -> "MultCharacter":
        return MultCharacter(self.a * k, self.modulus)

    def check(self, ctx: FieldContext) -> None:
        if self.modulus != ctx.order:
            raise ContextMismatch(f"character modulo {self.modulus} used with p={ctx.p}")

    def values(self, ctx: FieldContext) -> np.ndarray:
        """Table of chi(x) for x in F_p, with chi(0) = 0."""
        self.check(ctx)
        vals = np.zeros(ctx.p, dtype=np.complex128)
        k = ctx.dlog[1:]
        vals[1:] = np.exp(2j * np.pi * ((self.a * k) % ctx.order) / ctx.order)
        return vals

    def __call__(self, ctx: FieldContext, x: int) -> complex:
        self.check(ctx)
        x %= ctx.p
        if x == 0:
            return 0j
        return complex(np.exp(2j * np.pi * ((self.a * int(ctx.dlog[x])) % ctx.order) / ctx.order))


def gauss_sum(ctx: FieldContext, chi: MultCharacter) -> complex:
    """g(psi, chi) = sum over x != 0 of chi(x) psi(x)."""
    vals = chi.values(ctx)
    return complex(np.sum(vals[1:] * ctx.psi_table[1:]))


@lru_cache(maxsize=32)
def gauss_sum_table(ctx: FieldContext) -> np.ndarray:
    """G[e] = g(psi, chi_e) for every exponent e, from one transform of psi."""
    psi_hat = mult_dft(ctx, ctx.psi_table[1:])
    table = psi_hat[(-np.arange(ctx.order)) % ctx.order]
    table.setflags(write=False)
    return table


def jacobi_sum_direct(ctx: FieldContext, chi1: MultCharacter, chi2: MultCharacter) -> complex:
    """J(chi1, chi2) = sum over x of chi1(x) chi2(1 - x), by direct summation."""
    v1 = chi1.values(ctx)
    v2 = chi2.values(ctx)
    xs = np.arange(ctx.p)
    return complex(np.sum(v1 * v2[(1 - xs) % ctx.p]))


def jacobi_sum(ctx: FieldContext, chi1: MultCharacter, chi2: MultCharacter) -> complex:
    """J(chi1, chi2) via Gauss sums: g(chi1) g(chi2) / g(chi1 chi2)."""
    chi1.check(ctx)
    chi2.check(ctx)
    product = chi1 * chi2
    if not product.is_trivial:
        gauss = gauss_sum_table(ctx)
        return complex(gauss[chi1.a] * gauss[chi2.a] / gauss[product.a])
    # chi2 = conj(chi1)
    if chi1.is_trivial:
        return complex(ctx.p - 2)
    return complex(-chi1.parity)


# --- transforms -----------------------------------------------------------

def _direct_dft(h: np.ndarray) -> np.ndarray:
    n = h.shape[-1]
    k = np.arange(n)
    w = np.exp(-2j * np.pi * ((np.outer(k, k)) % n) / n)
    return h @ w.T


def _chirp(n: int) -> np.ndarray:
    j = np.arange(n, dtype=np.int64)
    return np.exp(-1j * np.pi * ((j * j) % (2 * n)) / n)


def _bluestein_dft(h: np.ndarray) -> np.ndarray:
    """Length-n DFT via a power-of-two circular convolution (chirp-z)."""
    n = h.shape[-1]
    size = 1
    while size < 2 * n - 1:
        size *= 2
    c = _chirp(n)
    u = np.zeros(h.shape[:-1] + (size,), dtype=np.complex128)
    u[..., :n] = h * c
    v = np.zeros(size, dtype=np.complex128)
    v[:n] = np.conj(c)
    v[size - n + 1:] = np.conj(c[1:])[::-1]
    conv = np.fft.ifft(np.fft.fft(u, axis=-1) * np.fft.fft(v), axis=-1)
    return conv[..., :n] * c


def cyclic_dft(h: np.ndarray) -> np.ndarray:
    """X[a] = sum_k h[k] e(-a k / n) along the last axis."""
    h = np.asarray(h, dtype=np.complex128)
    if h.shape[-1] <= DIRECT_DFT_THRESHOLD:
        return _direct_dft(h)
    return _bluestein_dft(h)


def _check_length(ctx: FieldContext, f: np.ndarray) -> np.ndarray:
    f = np.asarray(f, dtype=np.complex128)
    if f.ndim == 0 or f.shape[-1] != ctx.order:
        raise LengthMismatch(f"expected {ctx.order} values on F_p^x, got shape {f.shape}")
    return f


def mult_dft(ctx: FieldContext, f: np.ndarray) -> np.ndarray:
    """out[a] = sum over x in F_p^x of f(x) conj(chi_a(x)).

    ``f`` is indexed by ``x - 1``; leading axes are transformed independently.
    """
    f = _check_length(ctx, f)
    h = f[..., ctx.exp - 1]
    return cyclic_dft(h)


def mult_idft(ctx: FieldContext, spectrum: np.ndarray) -> np.ndarray:
    """Inverse of ``mult_dft``; returns values indexed by ``x - 1``."""
    spectrum = _check_length(ctx, spectrum)
    h = np.conj(cyclic_dft(np.conj(spectrum))) / ctx.order
    out = np.empty_like(h)
    out[..., ctx.exp - 1] = h
    return out
