"""``gf-infer`` command-line driver.

Exit codes: 0 success, 2 front-end error (syntax, validation), 3 evaluation
error, 4 usage error.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from . import models
from .errors import EvaluationError, FrontEndError
from .kernels import make_kernel
from .parser import parse
from .report import dumps, enumerate_document, render_text, report_document, simulate_document
from .summary import infer, query_of

EXIT_OK, EXIT_FRONTEND, EXIT_EVAL, EXIT_USAGE = 0, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="gf-infer", description="Exact posterior inference by generating functions.")
    p.add_argument("file", help="program file (or the name of a shipped model)")
    p.add_argument("--var", help="query variable (default: the last one assigned)")
    p.add_argument("--rational", action="store_true", help="exact rational arithmetic")
    p.add_argument("--precision", type=int, metavar="BITS", help="binary precision of BigFloat arithmetic")
    p.add_argument("--bounds", action="store_true", help="interval arithmetic with guaranteed enclosures")
    p.add_argument("--mass-limit", type=int, metavar="N", help="report masses for k = 0..N")
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.add_argument("--naive-observe", action="store_true",
                   help="expand compound observations through a fresh variable")
    p.add_argument("--oracle", choices=("enumerate", "simulate"), help="run a reference oracle instead")
    p.add_argument("--samples", type=int, default=100_000, metavar="N", help="simulation sample count")
    p.add_argument("--seed", type=int, default=0, metavar="N", help="simulation seed")
    p.add_argument("--truncate-at", type=int, metavar="N", help="enumeration truncation point")
    p.add_argument("--no-mgf", action="store_true",
                   help="keep continuous variables in the PGF coordinate (numerically fragile)")
    p.add_argument("--no-memo", action="store_true", help="disable sharing of repeated evaluations")
    p.add_argument("--no-timings", action="store_true", help="report zero timings (reproducible output)")
    return p


def _kernel(args, parser):
    if args.rational and (args.precision or args.bounds):
        parser.error("--rational cannot be combined with --precision or --bounds")
    if args.precision is not None and args.precision < 53:
        parser.error("--precision must be at least 53")
    if args.rational:
        return make_kernel("rational")
    if args.bounds:
        return make_kernel("interval", args.precision)
    if args.precision is not None:
        return make_kernel("bigfloat", args.precision)
    return make_kernel("float64")


def _read(path: str) -> str:
    p = Path(path)
    if not p.exists() and path in models.NAMES:
        return models.source(path)
    return p.read_text(encoding="utf-8")


def run(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    args = parser.parse_args(argv)
    kernel = _kernel(args, parser)
    if args.samples <= 0:
        parser.error("--samples must be positive")
    try:
        text = _read(args.file)
    except OSError as e:
        print(f"gf-infer: cannot read {args.file}: {e.strerror or e}", file=err)
        return EXIT_USAGE
    try:
        program = parse(text)
        if args.var is not None:
            program.var(args.var)
        t0 = time.perf_counter()
        if args.oracle == "enumerate":
            from .oracle import enumerate_program
            q = query_of(program, args.var).name
            mf = enumerate_program(program, exact=args.rational, truncate_at=args.truncate_at)
            ms = (time.perf_counter() - t0) * 1e3
            doc = enumerate_document(mf, q, _timings(ms, args))
        elif args.oracle == "simulate":
            from .oracle import simulate_program
            q = query_of(program, args.var).name
            ss = simulate_program(program, args.samples, args.seed)
            ms = (time.perf_counter() - t0) * 1e3
            doc = simulate_document(ss, q, args.seed, _timings(ms, args))
        else:
            report = infer(program, kernel, var=args.var, mass_limit=args.mass_limit,
                           naive_observe=args.naive_observe, mgf=not args.no_mgf, memo=not args.no_memo)
            doc = report_document(report, timings=not args.no_timings)
    except FrontEndError as e:
        print(f"gf-infer: {type(e).__name__}: {e}", file=err)
        return EXIT_FRONTEND
    except EvaluationError as e:
        print(f"gf-infer: {type(e).__name__}: {e}", file=err)
        return EXIT_EVAL
    out.write(dumps(doc) if args.json else render_text(doc))
    if args.json:
        for w in doc["warnings"]:
            print(f"gf-infer: warning: {w}", file=err)
    return EXIT_OK


def _timings(ms: float, args) -> dict:
    v = 0.0 if args.no_timings else round(ms, 3)
    return {"eval_ms": v, "total_ms": v}


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
