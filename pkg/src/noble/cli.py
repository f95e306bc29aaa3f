"""Command line interface: table building, walk counts, verification."""

from __future__ import annotations

import argparse
import os
import sys
import time

from mpmath import mp

from . import bounds
from .ledger import (
    CycleDetected,
    LedgerSyntaxError,
    LedgerValidationError,
    UnknownSymbol,
)
from .rewrite import GateViolation
from .verifier import (
    ensure_table,
    load_beta_ledger,
    load_config,
    run_verification,
    search_thresholds,
)
from .walks import build_avoiding_table, build_nbw_table, build_srw_table

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_ERROR = 2


def default_cache_dir():
    return os.environ.get("NOBLE_CACHE_DIR", os.path.join(os.getcwd(), ".noble-cache"))


def _cache_path(args, d):
    if args.cache:
        return args.cache
    os.makedirs(default_cache_dir(), exist_ok=True)
    return os.path.join(default_cache_dir(), f"srw-d{d}.itab")


def _load_config(args):
    with open(args.config) as f:
        return load_config(f.read(), args.config)


def cmd_srw_table(args):
    cfg = _load_config(args)
    if args.precision:
        cfg.precision_digits = args.precision
    d = cfg.bootstrap.d
    path = _cache_path(args, d)
    t0 = time.time()
    done = []

    def progress(cx):
        done.append(cx)
        print(f"  [{len(done):3d}] base rows at {list(cx)}", flush=True)

    tab, built = ensure_table(cfg, path, compute_missing=True, progress=progress)
    status = "built" if built else "already covering"
    print(
        f"table for d={d}: {status}, {len(tab.entries)} entries, "
        f"{len(tab.points)} points, {time.time()-t0:.1f}s -> {path}"
    )
    return EXIT_OK


def cmd_walk_count(args):
    from .lattice import canon_key

    d = args.d
    n = args.n
    x = tuple(int(v) for v in args.x.split(",")) if args.x else ()
    if args.kind == "srw":
        tab = build_srw_table(d, n)
    elif args.kind == "nbw":
        tab = build_nbw_table(d, n)
    else:
        tab = build_avoiding_table(d, n, kind=args.kind)
    print(tab.counts.get((n, canon_key(x)), 0))
    return EXIT_OK


def cmd_verify(args, report_only=False):
    cfg = _load_config(args)
    if args.precision:
        cfg.precision_digits = args.precision
    path = _cache_path(args, cfg.bootstrap.d)
    t0 = time.time()
    tab, built = ensure_table(cfg, path, compute_missing=args.compute_missing)
    with open(args.ledger) as f:
        ledger_text = f.read()
    ledger, _doc = load_beta_ledger(ledger_text, cfg, table=tab, path=args.ledger)
    report = run_verification(cfg, ledger, tab)
    text = report.render()
    if args.report_out:
        with open(args.report_out, "w") as f:
            f.write(text)
        print(f"report written to {args.report_out}")
    else:
        print(text, end="")
    dt = time.time() - t0
    print(f"elapsed: {dt:.1f}s (table {'built' if built else 'cached'})", file=sys.stderr)
    if report_only:
        return EXIT_OK
    return EXIT_OK if report.verdict.holds else EXIT_FAILED


def cmd_report(args):
    return cmd_verify(args, report_only=True)


def cmd_search(args):
    cfg = _load_config(args)
    if args.precision:
        cfg.precision_digits = args.precision
    path = _cache_path(args, cfg.bootstrap.d)
    tab, _built = ensure_table(cfg, path, compute_missing=args.compute_missing)
    with open(args.ledger) as f:
        ledger_text = f.read()
    result = search_thresholds(
        cfg, ledger_text, tab, ledger_path=args.ledger, seed=args.seed
    )
    st = result["state"]
    print(f"feasible: {result['feasible']}")
    print(f"worst margin: {result['objective']:.6f}")
    print("best configuration:")
    print(f"  Gamma1 = {st['Gamma1']:.6g}")
    print(f"  Gamma2 = {st['Gamma2']:.6g}")
    print(f"  Gamma3 = {st['Gamma3']:.6g}")
    print(f"  cmu    = {st['cmu']:.6g}")
    for i, w in enumerate(st["weights"]):
        print(f"  weight[{i}] = {w:.6g}")
    return EXIT_OK if result["feasible"] else EXIT_FAILED


def build_parser():
    ap = argparse.ArgumentParser(
        prog="noble",
        description="verification toolkit for high-dimensional lattice bootstrap bounds",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, needs_ledger=False):
        p.add_argument("--config", required=True, help="configuration document")
        if needs_ledger:
            p.add_argument("--ledger", required=True, help="bound ledger document")
        p.add_argument("--cache", help="integral cache file (default: cache dir)")
        p.add_argument("--precision", type=int, help="target enclosure digits")
        p.add_argument("--compute-missing", action="store_true")
        p.add_argument("--report-out", help="write the report to this file")
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("srw-table", help="build or extend the integral cache")
    common(p)
    p.set_defaults(fn=cmd_srw_table)

    p = sub.add_parser("walk-count", help="print one exact walk count")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--kind", choices=["srw", "nbw", "bond-sa", "saw"], default="srw")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--x", default="", help="comma separated coordinates, empty = origin")
    p.set_defaults(fn=cmd_walk_count)

    p = sub.add_parser("verify", help="run the verification, exit 0 iff it holds")
    common(p, needs_ledger=True)
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("report", help="render the report without verdict semantics")
    common(p, needs_ledger=True)
    p.set_defaults(fn=cmd_report)

    p = sub.add_parser("search", help="coordinate descent over thresholds and weights")
    common(p, needs_ledger=True)
    p.set_defaults(fn=cmd_search)
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except (
        LedgerSyntaxError,
        LedgerValidationError,
        UnknownSymbol,
        CycleDetected,
        GateViolation,
        ArithmeticError,
        FileNotFoundError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
