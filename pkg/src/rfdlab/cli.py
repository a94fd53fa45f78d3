"""Command line: ``rfdlab {compress,decompress,bounds,experiment}``.

Exit codes: 0 ok, 1 usage (bad flags or parameters), 2 runtime failure
(I/O, corrupt stream, failed verdicts).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from pathlib import Path

from . import analysis
from .coder import StreamError, compress, decompress
from .estimator import InvalidParams, RfdParams, validate_params
from .pws import InfeasibleCap

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _fraction(text: str) -> Fraction:
    try:
        c = Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a rational: {text!r}") from exc
    return c


def _add_param_flags(p, defaults: str):
    g = p.add_argument_group(f"model parameters ({defaults})")
    g.add_argument("--d", type=int, help="increment per observation")
    g.add_argument("--c", type=_fraction, help="discount as NUM/DEN")
    t = g.add_mutually_exclusive_group()
    t.add_argument("--T", type=int, help="frequency total threshold")
    t.add_argument("--L", type=int, help="set T = N + d*L")
    g.add_argument("--s0", help="initial counts: 'ones', one integer, or a comma list")


def _params(args, N: int, d: int, c: Fraction, T: int | None, L: int | None) -> RfdParams:
    d = args.d if args.d is not None else d
    c = args.c if args.c is not None else c
    if args.T is not None:
        T, L = args.T, None
    elif args.L is not None:
        T, L = None, args.L
    s0 = None
    if args.s0 and args.s0 != "ones":
        vals = [int(v) for v in args.s0.split(",")]
        s0 = tuple(vals * N) if len(vals) == 1 else tuple(vals)
    if T is None:
        T = N + d * L
    params = RfdParams(N, d, c.numerator, c.denominator, T, s0)
    bad = validate_params(params)
    if bad:
        raise InvalidParams(bad)
    return params


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rfdlab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("compress", help="compress a file over the byte alphabet")
    p.add_argument("input", type=Path)
    p.add_argument("output", type=Path)
    _add_param_flags(p, "default d=32, c=1/2, T=65536, s0=ones")

    p = sub.add_parser("decompress", help="restore a file written by compress")
    p.add_argument("input", type=Path)
    p.add_argument("output", type=Path)

    p = sub.add_parser("bounds", help="evaluate the redundancy bounds")
    p.add_argument("--alphabet", type=int, default=2)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--segments", type=int, default=1, help="|S| of the competitor")
    p.add_argument("--rescales", type=int, help="measured |R|; default: worst case")
    p.add_argument("--t0", type=int, help="initial total for the single-segment bound")
    p.add_argument("--eps", type=float)
    p.add_argument("--gamma", type=int)
    _add_param_flags(p, "default d=1, c=0, L=ceil(sqrt(n))")

    p = sub.add_parser("experiment", help="randomized redundancy trials")
    p.add_argument("--n", type=int, default=10000)
    p.add_argument("--segments", type=int, default=1)
    p.add_argument("--alphabet", type=int, default=2)
    p.add_argument("--eps", type=float, default=0.0)
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", type=Path, help="CSV, or JSON when the name ends in .json")
    p.add_argument("--example1", action="store_true",
                   help="sweep L=ceil(sqrt(n)), c=gamma/L over --n-list")
    p.add_argument("--n-list", default="1000,10000,100000")
    p.add_argument("--gamma", type=int, default=0)
    _add_param_flags(p, "default d=1, c=0, L=ceil(sqrt(n))")
    return parser


def _sqrt_L(n: int) -> int:
    return math.isqrt(n - 1) + 1 if n > 1 else 1


def cmd_compress(args) -> int:
    params = _params(args, 256, 32, Fraction(1, 2), 1 << 16, None)
    data = args.input.read_bytes()
    blob, meter = compress(data, params)
    args.output.write_bytes(blob)
    print(f"original_bytes\t{len(data)}")
    print(f"compressed_bytes\t{len(blob)}")
    print(f"ideal_bits\t{meter.ideal_bits:.3f}")
    print(f"actual_bits\t{meter.actual_bits}")
    return EXIT_OK


def cmd_decompress(args) -> int:
    data = decompress(args.input.read_bytes())
    args.output.write_bytes(data)
    print(f"restored_bytes\t{len(data)}")
    return EXIT_OK


def cmd_bounds(args) -> int:
    N, n = args.alphabet, args.n
    params = _params(args, N, 1, Fraction(0), None, _sqrt_L(n))
    der = params.derived()
    r = analysis.r_function(params, float(der.L) + 1)
    rows = [
        ("L", f"{der.L} ({float(der.L):.6g})"),
        ("A", f"{der.A} ({float(der.A):.6g})"),
        ("r(L+1)", f"{r:.6f}"),
        ("prop1", f"{analysis.bound_prop1(params, n, args.t0):.6f}"),
    ]
    inputs = analysis.BoundInputs(params, n, args.segments, args.rescales, args.t0)
    label = "measured" if args.rescales is not None else "worst-case"
    rows.append((f"thm1 ({label} |R|={inputs.rescales})", f"{analysis.bound_thm1(inputs):.6f}"))
    try:
        delta, rhs = analysis.bound_thm2(analysis.BoundInputs(
            params, n, args.segments, args.rescales, args.t0, args.eps,
            None if args.gamma is None else _gamma(params, args.gamma)))
        rows += [("thm2 delta", f"{delta:.6f}"), ("thm2 rhs", f"{rhs:.6f}")]
    except analysis.NotApplicable as exc:
        rows += [("thm2 delta", f"n/a ({exc})"), ("thm2 rhs", "n/a")]
    for name, value in rows:
        print(f"{name}\t{value}")
    return EXIT_OK


def _gamma(params, gamma):
    if params.discount * params.L != gamma:
        raise analysis.NotApplicable(f"c * L = {params.discount * params.L} != gamma {gamma}")
    return gamma


def _trial(job):
    params, n, segments, alphabet, eps, seed = job
    return analysis.run_trial(params, n, segments, alphabet, eps, seed).csv_row()


def _write_rows(rows, columns, out: Path | None):
    if out is not None and out.suffix == ".json":
        out.write_text(json.dumps(rows, indent=1) + "\n")
        return
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    if out is None:
        sys.stdout.write(buf.getvalue())
    else:
        out.write_text(buf.getvalue())


def cmd_experiment(args) -> int:
    N = args.alphabet
    if not 0 <= args.eps < 1:
        raise UsageError("--eps must lie in [0, 1)")
    if 1 - args.eps < 1 / N:
        raise InfeasibleCap(f"--eps {args.eps} infeasible for alphabet {N}: 1 - eps < 1/N")
    if args.example1:
        n_list = [int(v) for v in args.n_list.split(",")]
        seeds = range(args.seed, args.seed + args.trials)
        rows = analysis.example1_sweep(args.segments, n_list, args.gamma, N, seeds)
        _write_rows(rows, list(rows[0]) if rows else [], args.out)
        for n, mean in analysis.summarize_sweep(rows).items():
            print(f"n={n}\tmean_normalized={mean:.6f}", file=sys.stderr)
    else:
        params = _params(args, N, 1, Fraction(0), None, _sqrt_L(args.n))
        if not 1 <= args.segments <= args.n:
            raise UsageError("--segments must lie in 1..n")
        jobs = [(params, args.n, args.segments, N, args.eps, args.seed + i)
                for i in range(args.trials)]
        if args.workers > 1:
            with ProcessPoolExecutor(args.workers) as pool:
                rows = list(pool.map(_trial, jobs))
        else:
            rows = [_trial(j) for j in jobs]
        _write_rows(rows, list(analysis.REPORT_COLUMNS), args.out)
    failed = sum(1 for r in rows if r["verdicts"] != "pass")
    if failed:
        print(f"{failed} of {len(rows)} rows failed a verdict", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


COMMANDS = {"compress": cmd_compress, "decompress": cmd_decompress,
            "bounds": cmd_bounds, "experiment": cmd_experiment}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (InvalidParams, InfeasibleCap, UsageError) as exc:
        print(f"rfdlab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, StreamError) as exc:
        print(f"rfdlab: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
