"""tracelab コマンドラインインターフェース

Exit codes: 0 on success, 1 when a frozen constant regresses, 2 on usage or
input errors.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence

from . import __version__
from .classifier import SheafProfile, classify
from .config import (
    build_trace,
    load_config,
    resolve_config_path,
    resolve_threads,
    setup_logging,
)
from .errors import RegressionFailure, TraceLabError
from .evaluator import (
    compare_frozen,
    exceptional_scan,
    freeze_constants,
    load_frozen,
    save_frozen,
    sum_of_products,
    summary_json,
    verify_pattern,
    write_report_csv,
)
from .field_core import build_context
from .hyp_classifier import predict
from .pgl2 import Sigma, SumPattern, parse_matrices
from .rep_theory import GroupLabel, trivial_multiplicity
from .trace_fns import CharTuplePair, additive_character_table, hyp_batch, kloosterman_batch

logger = logging.getLogger("tracelab")

EXIT_OK = 0
EXIT_REGRESSION = 1
EXIT_USAGE = 2
DEFAULT_P = 101


def _fmt(z: complex) -> str:
    return f"{z.real:.12g} {z.imag:+.12g}i"


def _sigmas(text: Optional[str], k: int) -> List[Sigma]:
    if not text:
        return [Sigma.ID] * k
    return [Sigma.parse(s) for s in text.split(",")]


def _table(args, ctx):
    if args.chi is not None or args.rho is not None:
        return hyp_batch(ctx, CharTuplePair.from_exponents(ctx, args.chi or [], args.rho or []))
    return kloosterman_batch(ctx, args.r)


# サブコマンド

def cmd_context(args) -> int:
    ctx = build_context(args.p)
    print(json.dumps({"p": ctx.p, "g": ctx.g, "order": ctx.order}))
    return EXIT_OK


def cmd_kloos(args) -> int:
    ctx = build_context(args.p)
    table = kloosterman_batch(ctx, args.r)
    if args.csv:
        table.to_csv(args.csv)
        logger.info("wrote %s", args.csv)
    if args.x is not None:
        print(_fmt(table[args.x]))
    return EXIT_OK


def cmd_hyp(args) -> int:
    ctx = build_context(args.p)
    table = hyp_batch(ctx, CharTuplePair.from_exponents(ctx, args.chi or [], args.rho or []))
    if args.csv:
        table.to_csv(args.csv)
    if args.t is not None:
        print(_fmt(table[args.t]))
    return EXIT_OK


def _pattern(args) -> SumPattern:
    gammas = parse_matrices(args.gammas, args.p)
    if not gammas:
        raise TraceLabError("--gammas is empty")
    return SumPattern.of(gammas, _sigmas(args.sigmas, len(gammas)), args.h)


def cmd_classify(args) -> int:
    pattern = _pattern(args)
    profile = SheafProfile.parse(args.profile, args.p)
    prediction = classify(pattern, profile, args.p, strict=args.strict)
    print(prediction.to_json() if args.json else str(prediction))
    return EXIT_OK


def cmd_classify_hyp(args) -> int:
    ctx = build_context(args.p)
    pair = CharTuplePair.from_exponents(ctx, args.chi or [], args.rho or [])
    print(predict(pair, args.p).to_json())
    return EXIT_OK


def cmd_sumprod(args) -> int:
    ctx = build_context(args.p)
    table = _table(args, ctx)
    pattern = _pattern(args)
    value = sum_of_products(table, pattern)
    profile = SheafProfile.parse(args.profile, args.p) if args.profile else table.profile
    out = {"p": args.p, "re": value.real, "im": value.imag, "residual": abs(value) / ctx.p**0.5}
    if profile is not None:
        prediction = classify(pattern, profile, args.p)
        out["prediction"] = prediction.to_dict()
        if prediction.is_main_term:
            out["residual"] = abs(value - prediction.m * ctx.p) / ctx.p**0.5
    print(json.dumps(out, sort_keys=True))
    return EXIT_OK


def cmd_verify(args) -> int:
    path = resolve_config_path(args.config)
    if not path.exists():
        print(f"error: config file not found: {path}", file=sys.stderr)
        return EXIT_USAGE
    config = load_config(path)  # 設定ファイルの読み込み
    setup_logging(config.logging)
    threads = resolve_threads(args.threads, config)
    primes = config.prime_list()
    reports = [
        verify_pattern(build_trace(pat.trace), pat.spec(), primes, pat.profile, threads)
        for pat in config.patterns
    ]
    output = args.output or config.output
    write_report_csv([row for r in reports for row in r.rows], output)
    logger.info("wrote %s", output)

    frozen_path = config.frozen_constants
    frozen = None
    if args.freeze:
        if not frozen_path:
            raise TraceLabError("--freeze needs frozen_constants in the config")
        save_frozen(freeze_constants(reports), frozen_path)
        logger.info("froze %d constants into %s", len(reports), frozen_path)
    elif frozen_path and Path(frozen_path).exists():  # 保存済み定数と比較
        frozen = load_frozen(frozen_path)
    elif frozen_path:
        logger.warning("%s not found; run with --freeze first", frozen_path)
    print(summary_json(reports, frozen))
    if frozen is not None:
        regressions = compare_frozen(reports, frozen)
        if regressions:
            ids = ", ".join(pid for pid, _, _ in regressions)
            raise RegressionFailure(f"frozen constants exceeded: {ids}")
    return EXIT_OK


def cmd_scan(args) -> int:
    ctx = build_context(args.p)
    table = _table(args, ctx)
    weight = additive_character_table(ctx, args.h)
    if args.sampled:
        result = exceptional_scan(
            table, args.k, args.l, weight, args.threshold, "sampled", args.sampled, args.seed
        )
    else:
        result = exceptional_scan(table, args.k, args.l, weight, args.threshold)
    out = {
        "p": result.p,
        "k": result.k,
        "l": result.l,
        "mode": result.mode,
        "count": result.count,
        "total": result.total,
        "witnesses": [[list(t), abs(s)] for t, s in result.witnesses[: args.show]],
        "tags": list(result.tags),
    }
    if result.ci is not None:
        out["ci"] = list(result.ci)
    print(json.dumps(out))
    return EXIT_OK


def cmd_mult(args) -> int:
    print(trivial_multiplicity(GroupLabel(args.family, args.parameter), args.m, args.n))
    return EXIT_OK


# 引数の定義

def _add_trace_args(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--r", type=int, default=2, help="Kloosterman rank (default: 2)")
    sp.add_argument("--chi", type=int, nargs="*", help="hypergeometric chi exponents mod p-1")
    sp.add_argument("--rho", type=int, nargs="*", help="hypergeometric rho exponents mod p-1")


def _add_pattern_args(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--gammas", required=True, help="matrices as '[[a,b],[c,d]],...'")
    sp.add_argument("--sigmas", help="comma separated id/conj flags (default: all id)")
    sp.add_argument("--h", type=int, default=0, help="additive twist (default: 0)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tracelab", description="Trace function laboratory over F_p")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("context", help="primitive root and group order")
    sp.add_argument("p", type=int)
    sp.set_defaults(func=cmd_context)

    sp = sub.add_parser("kloos", help="hyper-Kloosterman table")
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--r", type=int, default=2)
    sp.add_argument("--x", type=int, help="print Kl_r(x)")
    sp.add_argument("--csv", help="write the whole table")
    sp.set_defaults(func=cmd_kloos)

    sp = sub.add_parser("hyp", help="hypergeometric sum table")
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--chi", type=int, nargs="*")
    sp.add_argument("--rho", type=int, nargs="*")
    sp.add_argument("--t", type=int, help="print Hyp(t)")
    sp.add_argument("--csv", help="write the whole table")
    sp.set_defaults(func=cmd_hyp)

    sp = sub.add_parser("classify", help="predict cancellation or main term")
    sp.add_argument("--p", type=int, default=DEFAULT_P)
    sp.add_argument("--profile", required=True, help="sp:2, sl:3 or sl:3:neg")
    sp.add_argument("--strict", action="store_true", help="reject conj flags under Sp")
    sp.add_argument("--json", action="store_true")
    _add_pattern_args(sp)
    sp.set_defaults(func=cmd_classify)

    sp = sub.add_parser("classify-hyp", help="monodromy candidates of a hypergeometric pair")
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--chi", type=int, nargs="*")
    sp.add_argument("--rho", type=int, nargs="*")
    sp.set_defaults(func=cmd_classify_hyp)

    sp = sub.add_parser("sumprod", help="evaluate one sum of products")
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--profile")
    _add_trace_args(sp)
    _add_pattern_args(sp)
    sp.set_defaults(func=cmd_sumprod)

    sp = sub.add_parser("verify", help="run a suite config over a prime range")
    sp.add_argument("--config", help="suite config (default: $TRACELAB_CONFIG or ./config.json)")
    sp.add_argument("--threads", type=int)
    sp.add_argument("--output", help="CSV report path (default: from config)")
    sp.add_argument("--freeze", action="store_true", help="write residuals as frozen constants")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("scan", help="count exceptional dilation tuples")
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--k", type=int, default=2)
    sp.add_argument("--l", type=int, default=0)
    sp.add_argument("--h", type=int, default=0, help="weight psi(hx) (default: 0)")
    sp.add_argument("--threshold", type=float, default=4.0)
    sp.add_argument("--sampled", type=int, metavar="N", help="sample N tuples instead")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--show", type=int, default=10, help="witnesses to print")
    _add_trace_args(sp)
    sp.set_defaults(func=cmd_scan)

    sp = sub.add_parser("mult", help="trivial multiplicity in std^m (x) dual^n")
    sp.add_argument("family", choices=["sp", "sl"])
    sp.add_argument("parameter", type=int)
    sp.add_argument("m", type=int)
    sp.add_argument("n", type=int)
    sp.set_defaults(func=cmd_mult)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE
    setup_logging()
    try:
        return args.func(args)
    except RegressionFailure as e:
        print(f"regression: {e}", file=sys.stderr)
        return EXIT_REGRESSION
    except (TraceLabError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
