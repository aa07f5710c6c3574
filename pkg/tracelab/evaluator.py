"""Sums of products, prime-range verification, application sums and the
exceptional-tuple scan."""
from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import product
from pathlib import Path
from typing import Callable, Dict, IO, List, Optional, Sequence, Tuple, Union

import numpy as np

from .classifier import Prediction, PredictionKind, SheafProfile, classify
from .errors import ContextMismatch, CostCapExceeded, TraceLabError
from .field_core import FieldContext, MultCharacter, build_context, mult_dft, mult_idft
from .pgl2 import PatternSpec, Sigma, SumPattern
from .trace_fns import (
    Poly,
    TraceTable,
    ft_kummer_phase,
    kloosterman_batch,
    poly_eval_all,
)

logger = logging.getLogger(__name__)

DEFAULT_THRESHOLD = 4.0
MAX_WITNESSES = 100
EXHAUSTIVE_MAX_VARS = 3
EXHAUSTIVE_MAX_P = 512
SCAN_CHUNK = 256
FROZEN_SLACK = 2.0

TableBuilder = Callable[[FieldContext], TraceTable]


@dataclass(frozen=True)
class VerificationRow:
    p: int
    pattern_id: str
    value: complex
    kind: PredictionKind
    m: Optional[int]
    residual: float

    def csv_fields(self) -> List[str]:
        return [
            str(self.p),
            self.pattern_id,
            self.kind.value,
            "" if self.m is None else str(self.m),
            format(self.value.real, ".12g"),
            format(self.value.imag, ".12g"),
            format(self.residual, ".12g"),
        ]


CSV_HEADER = ["p", "pattern", "kind", "m", "re", "im", "residual"]


@dataclass
class VerificationReport:
    pattern_id: str
    rows: List[VerificationRow]

    @property
    def max_residual(self) -> float:
        return max((r.residual for r in self.rows), default=0.0)

    @property
    def growth(self) -> float:
        """Worst residual over the larger half of the primes divided by
        max(1, worst residual over the smaller half)."""
        if not self.rows:
            return 0.0
        rows = sorted(self.rows, key=lambda r: r.p)
        half = len(rows) // 2
        lower = rows[: max(half, 1)]
        upper = rows[half:]
        return max(r.residual for r in upper) / max(1.0, max(r.residual for r in lower))


def residual(value: complex, prediction: Prediction, p: int) -> float:
    if prediction.is_main_term:
        return abs(value - prediction.m * p) / math.sqrt(p)
    return abs(value) / math.sqrt(p)


def _check_same_field(table: TraceTable, p: int) -> None:
    if table.p != p:
        raise ContextMismatch(f"table over p={table.p} used with a pattern over p={p}")


def sum_of_products(table: TraceTable, pattern: SumPattern) -> complex:
    """Restricted sum of prod K(gamma_i x)^sigma_i psi(h x) over good x."""
    _check_same_field(table, pattern.p)
    ctx = table.ctx
    regular = table.regular_mask
    good = np.ones(ctx.p, dtype=bool)
    prod = ctx.psi_table[(pattern.h * np.arange(ctx.p)) % ctx.p].copy()
    for gamma, sigma in pattern.pairs():
        ys = gamma.act_all(ctx)
        valid = ys >= 0
        safe = np.where(valid, ys, 0)
        good &= valid & regular[safe]
        vals = table.values[safe]
        prod *= np.conj(vals) if sigma == Sigma.CONJ else vals
    return complex(np.sum(prod[good]))


def sum_of_composed(
    tables: Sequence[TraceTable],
    arguments: Sequence[np.ndarray],
    weight: Optional[np.ndarray] = None,
    domain: Optional[np.ndarray] = None,
    respect_singular: bool = True,
) -> complex:
    """sum over x of prod K_i(f_i(x)) * weight(x); ``arguments[i][x] = f_i(x)`` or -1."""
    if len(tables) != len(arguments):
        raise TraceLabError("one argument map per table")
    if not tables:
        raise TraceLabError("at least one factor is needed")
    p = tables[0].p
    good = np.ones(p, dtype=bool) if domain is None else np.asarray(domain, dtype=bool).copy()
    prod = np.ones(p, dtype=np.complex128) if weight is None else np.asarray(weight, dtype=np.complex128).copy()
    for table, args in zip(tables, arguments):
        _check_same_field(table, p)
        args = np.asarray(args, dtype=np.int64)
        valid = args >= 0
        safe = np.where(valid, args, 0)
        good &= valid
        if respect_singular:
            good &= table.regular_mask[safe]
        prod *= table.values[safe]
    return complex(np.sum(prod[good]))


def _classify_row(
    p: int, builder: TableBuilder, spec: PatternSpec, profile: Optional[str]
) -> VerificationRow:
    ctx = build_context(p)
    table = builder(ctx)
    pattern = spec.at(p)
    prof = SheafProfile.parse(profile, p) if profile else table.profile
    if prof is None:
        raise TraceLabError(f"pattern {spec.id}: no sheaf profile given or attached to {table.label}")
    prediction = classify(pattern, prof, p)
    value = sum_of_products(table, pattern)
    row = VerificationRow(p, spec.id, value, prediction.kind, prediction.m, residual(value, prediction, p))
    logger.debug("p=%d %s: %s residual %.4f", p, spec.id, prediction, row.residual)
    return row


def verify_pattern(
    builder: TableBuilder,
    spec: PatternSpec,
    primes: Sequence[int],
    profile: Optional[str] = None,
    threads: Optional[int] = None,
) -> VerificationReport:
    """One row per prime, ordered by p."""
    with ThreadPoolExecutor(max_workers=threads) as pool:
        rows = list(pool.map(lambda p: _classify_row(p, builder, spec, profile), primes))
    rows.sort(key=lambda r: (r.p, r.pattern_id))
    report = VerificationReport(spec.id, rows)
    logger.info(
        "%s: %d primes, max residual %.4f, growth %.3f",
        spec.id, len(rows), report.max_residual, report.growth,
    )
    return report


def write_report_csv(rows: Sequence[VerificationRow], out: Union[str, Path, IO[str]]) -> None:
    if isinstance(out, (str, Path)):
        with open(out, "w", encoding="utf-8", newline="") as f:
            write_report_csv(rows, f)
        return
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in sorted(rows, key=lambda r: (r.p, r.pattern_id)):
        writer.writerow(row.csv_fields())


# --- frozen constants -------------------------------------------------------

def freeze_constants(reports: Sequence[VerificationReport]) -> Dict[str, float]:
    return {r.pattern_id: r.max_residual for r in sorted(reports, key=lambda r: r.pattern_id)}


def save_frozen(constants: Dict[str, float], path: Union[str, Path]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(constants, f, indent=2, sort_keys=True)
        f.write("\n")


def load_frozen(path: Union[str, Path]) -> Dict[str, float]:
    with open(path, "r", encoding="utf-8") as f:
        raw = json.load(f)
    return {str(k): float(v) for k, v in raw.items()}


def compare_frozen(
    reports: Sequence[VerificationReport], frozen: Dict[str, float], slack: float = FROZEN_SLACK
) -> List[Tuple[str, float, float]]:
    """Patterns whose max residual exceeds ``slack`` times the frozen value."""
    regressions = []
    for report in reports:
        if report.pattern_id not in frozen:
            logger.warning("no frozen constant for pattern %s", report.pattern_id)
            continue
        limit = frozen[report.pattern_id]
        if report.max_residual > slack * limit + 1e-12:
            logger.error(
                "regression in %s: residual %.6f > %.1f x %.6f",
                report.pattern_id, report.max_residual, slack, limit,
            )
            regressions.append((report.pattern_id, report.max_residual, limit))
    return regressions


def summary_json(reports: Sequence[VerificationReport], frozen: Optional[Dict[str, float]] = None) -> str:
    out = {}
    for report in sorted(reports, key=lambda r: r.pattern_id):
        entry = {"max_residual": report.max_residual, "growth": report.growth, "rows": len(report.rows)}
        if frozen is not None and report.pattern_id in frozen:
            entry["frozen"] = frozen[report.pattern_id]
            entry["within"] = report.max_residual <= FROZEN_SLACK * frozen[report.pattern_id] + 1e-12
        out[report.pattern_id] = entry
    return json.dumps(out, indent=2, sort_keys=True)


# --- application sums -------------------------------------------------------

def fouvry_iwaniec(ctx: FieldContext, alpha: int, beta: int, kl2: Optional[TraceTable] = None) -> complex:
    """sum over t != 0, 1, beta/alpha of Kl2(a(t-1)^2) Kl2((t-1)(a t - b))
    Kl2(b(1/t - 1)^2) Kl2((1/t - 1)(b/t - a))."""
    p = ctx.p
    alpha %= p
    beta %= p
    if alpha == 0 or beta == 0:
        raise TraceLabError("alpha and beta must be nonzero")
    if alpha == beta:
        logger.info("fouvry_iwaniec with alpha == beta: no bound is expected (diagnostic only)")
    kl2 = kl2 if kl2 is not None else kloosterman_batch(ctx, 2)
    t = np.arange(p, dtype=np.int64)
    ti = ctx.inv[t]
    u = (t - 1) % p
    v = (ti - 1) % p
    args = [
        alpha * u % p * u % p,
        u * ((alpha * t - beta) % p) % p,
        beta * v % p * v % p,
        v * ((beta * ti - alpha) % p) % p,
    ]
    domain = np.ones(p, dtype=bool)
    domain[[0, 1, beta * int(ctx.inv[alpha]) % p]] = False
    return sum_of_composed([kl2] * 4, args, domain=domain)


def bombieri_bourgain(
    ctx: FieldContext,
    b: int,
    shifts: Sequence[int],
    chi: MultCharacter,
    fs: Sequence[Poly],
    g: Poly,
    gs: Optional[Sequence[Optional[Poly]]] = None,
    big_g: Optional[Poly] = None,
    chis: Optional[Sequence[MultCharacter]] = None,
) -> complex:
    """sum over all x of prod K_i(x + a_i) * psi(b x + G(x)) chi(g(x)), with
    K_i the Fourier transform of chi_i(f_i) psi(g_i)."""
    k = len(shifts)
    if len(fs) != k:
        raise TraceLabError("one polynomial f_i per shift")
    chis = list(chis) if chis is not None else [chi] * k
    gs = list(gs) if gs is not None else [None] * k
    if len(chis) != k or len(gs) != k:
        raise TraceLabError("one character and one phase per shift")
    if chi.is_trivial or any(c.is_trivial for c in chis):
        raise TraceLabError("all characters must be nontrivial")
    xs = np.arange(ctx.p, dtype=np.int64)
    weight = chi.values(ctx)[poly_eval_all(ctx, g)] * ctx.psi_table[(b * xs) % ctx.p]
    if big_g is not None:
        weight = weight * ctx.psi_table[poly_eval_all(ctx, big_g)]
    if k == 0:
        return complex(np.sum(weight))
    tables = [ft_kummer_phase(ctx, c, f, phase) for c, f, phase in zip(chis, fs, gs)]
    args = [(xs + a) % ctx.p for a in shifts]
    return sum_of_composed(tables, args, weight=weight, respect_singular=False)


# --- exceptional scan -------------------------------------------------------

@dataclass
class ScanResult:
    p: int
    k: int
    l: int
    threshold: float
    mode: str
    count: float
    total: int
    witnesses: List[Tuple[Tuple[int, ...], complex]] = field(default_factory=list)
    ci: Optional[Tuple[float, float]] = None
    tags: Tuple[str, ...] = ()


def _factor_arrays(table: TraceTable, k: int, l: int) -> List[np.ndarray]:
    """K (k times) then conj K (l times) on F_p^x, zero at singular points."""
    vals = np.where(table.regular_mask, table.values, 0)[1:]
    return [vals] * k + [np.conj(vals)] * l


def _weight_array(weight: TraceTable) -> np.ndarray:
    return np.where(weight.regular_mask, weight.values, 0)[1:]


def _scan_tags(table: TraceTable, l: int) -> Tuple[str, ...]:
    if l > 0 and table.profile is not None and table.profile.symmetry.is_symplectic:
        return ("outside-guarantee",)
    return ()


def direct_tuple_sum(table: TraceTable, k: int, l: int, weight: TraceTable, tup: Sequence[int]) -> complex:
    """sum over x != 0 of prod K(a_i x) prod conj K(b_j x) M(x) for one tuple."""
    ctx = table.ctx
    factors = _factor_arrays(table, k, l)
    xs = np.arange(1, ctx.p, dtype=np.int64)
    prod = _weight_array(weight).copy()
    for f, a in zip(factors, tup):
        prod *= f[(a * xs) % ctx.p - 1]
    return complex(np.sum(prod))


def exceptional_scan(
    table: TraceTable,
    k: int,
    l: int,
    weight: TraceTable,
    threshold: float = DEFAULT_THRESHOLD,
    mode: str = "exhaustive",
    samples: int = 2000,
    seed: int = 0,
) -> ScanResult:
    """Count dilation tuples (a, b) in (F_p^x)^(k+l) with |S(a, b)| > threshold sqrt(p)."""
    ctx = table.ctx
    if weight.p != ctx.p:
        raise ContextMismatch("table and weight over different primes")
    nvars = k + l
    if nvars < 1:
        raise TraceLabError("k + l must be at least 1")
    limit = threshold * math.sqrt(ctx.p)
    total = ctx.order**nvars
    tags = _scan_tags(table, l)
    if mode == "sampled":
        return _sampled_scan(table, k, l, weight, limit, threshold, samples, seed, tags)
    if mode != "exhaustive":
        raise TraceLabError(f"unknown scan mode '{mode}'")
    if nvars > EXHAUSTIVE_MAX_VARS or ctx.p > EXHAUSTIVE_MAX_P:
        raise CostCapExceeded(f"exhaustive scan limited to k+l <= {EXHAUSTIVE_MAX_VARS} and p <= {EXHAUSTIVE_MAX_P}")

    factors = _factor_arrays(table, k, l)
    w = _weight_array(weight)
    dilation_invariant = bool(np.allclose(w, w[0], atol=1e-12))
    units = np.arange(1, ctx.p, dtype=np.int64)

    # S(v) = sum_x A_v'(x) F_last(v_last x); the correlation covers every v_last at once.
    head = factors[:-1]
    last_hat = mult_dft(ctx, factors[-1])
    reversed_idx = (-np.arange(ctx.order)) % ctx.order
    if dilation_invariant and head:
        fixed, free = (1,), len(head) - 1
        multiplicity = ctx.order
    else:
        fixed, free = (), len(head)
        multiplicity = 1

    count = 0
    witnesses: List[Tuple[Tuple[int, ...], complex]] = []
    slices = [fixed + tuple(s) for s in product(range(1, ctx.p), repeat=free)]
    for start in range(0, len(slices), SCAN_CHUNK):
        chunk = slices[start:start + SCAN_CHUNK]
        rows = np.empty((len(chunk), ctx.order), dtype=np.complex128)
        for i, head_vals in enumerate(chunk):
            a = w.copy()
            for f, v in zip(head, head_vals):
                a *= f[(v * units) % ctx.p - 1]
            rows[i] = a
        a_hat = mult_dft(ctx, rows)
        sums = mult_idft(ctx, a_hat[:, reversed_idx] * last_hat)
        hits = np.abs(sums) > limit
        count += int(hits.sum()) * multiplicity
        for i, j in zip(*np.nonzero(hits)):
            if len(witnesses) >= MAX_WITNESSES:
                break
            witnesses.append((tuple(int(v) for v in chunk[i]) + (int(j) + 1,), complex(sums[i, j])))
    logger.info("scan p=%d (k, l)=(%d, %d): %d exceptional of %d", ctx.p, k, l, count, total)
    return ScanResult(ctx.p, k, l, threshold, "exhaustive", count, total, witnesses, None, tags)


def _wilson(hits: int, n: int, z: float = 1.96) -> Tuple[float, float]:
    f = hits / n
    denom = 1 + z * z / n
    center = (f + z * z / (2 * n)) / denom
    half = z * math.sqrt(f * (1 - f) / n + z * z / (4 * n * n)) / denom
    return max(0.0, center - half), min(1.0, center + half)


def _sampled_scan(table, k, l, weight, limit, threshold, samples, seed, tags) -> ScanResult:
    ctx = table.ctx
    nvars = k + l
    rng = np.random.default_rng(seed)
    tuples = rng.integers(1, ctx.p, size=(samples, nvars))
    hits = 0
    witnesses = []
    for tup in tuples:
        s = direct_tuple_sum(table, k, l, weight, [int(v) for v in tup])
        if abs(s) > limit:
            hits += 1
            if len(witnesses) < MAX_WITNESSES:
                witnesses.append((tuple(int(v) for v in tup), s))
    total = ctx.order**nvars
    lo, hi = _wilson(hits, samples)
    logger.info("sampled scan p=%d: %d/%d hits", ctx.p, hits, samples)
    return ScanResult(
        ctx.p, k, l, threshold, "sampled", hits / samples * total, total, witnesses, (lo * total, hi * total), tags
    )
