"""Command-line entry point: ``run``, ``worstcase`` and ``sweep``.

Exit codes: 0 success, 1 invariant violation, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from contextlib import contextmanager
from fractions import Fraction
from typing import NamedTuple

from .bounds import combined_lower_bound, opt_rate
from .core import DivisibilityError, InvariantViolation, random_shuffle
from .harness import DEFAULT_MAX_PAIRS, start_chain, step, worst_case_search
from .schemes import scheme_by_name, select_scheme

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


class SweepRow(NamedTuple):
    storage_points: Fraction
    measured_worst_rate: Fraction
    theoretical_opt_rate: Fraction
    combined_lower_bound: Fraction


def render(value, places: int = 6) -> str:
    """Fixed-point rendering of an exact rational.

    At least ``places`` fractional digits; terminating values that need more
    get all of them, so they never pick up rounding error. Non-terminating
    values round half-to-even.
    """
    q = Fraction(value)
    den = q.denominator
    twos = fives = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den == 1:
        places = max(places, twos, fives)
    scaled = round(q * 10**places)
    sign = "-" if scaled < 0 else ""
    whole, frac = divmod(abs(scaled), 10**places)
    return f"{sign}{whole}.{frac:0{places}d}"


def parse_storage(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"cannot parse storage {text!r}; use p/q or a decimal") from None


@contextmanager
def _output(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _writer(fh):
    return csv.writer(fh, lineterminator="\n")


def _scheme(args):
    if args.n < 1 or args.k < 1 or args.n % args.k:
        raise UsageError(f"K={args.k} must divide N={args.n}")
    try:
        scheme = scheme_by_name(args.scheme, args.k, args.n, args.storage)
        scheme.check_dims(args.d)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return scheme


def cmd_run(args) -> int:
    scheme = _scheme(args)
    if args.iters < 0:
        raise UsageError("--iters must be non-negative")
    try:
        run, rng = start_chain(scheme, args.n, args.d, args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    header = ["iter", "rate_bits", "rate_points"] + (["rate_points_exact"] if args.exact else [])
    with _output(args.out) as fh:
        out = _writer(fh)
        out.writerow(header)
        for _ in range(args.iters):
            rec = step(run, random_shuffle(args.n, args.k, rng))
            row = [rec.iteration, rec.rate_bits, render(rec.rate_points)]
            if args.exact:
                row.append(str(rec.rate_points))
            out.writerow(row)
    return EXIT_OK


def cmd_worstcase(args) -> int:
    scheme = _scheme(args)
    try:
        report = worst_case_search(scheme, args.n, args.d, seed=args.seed, max_pairs=args.max_pairs)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    optimum = opt_rate(args.k, args.n, scheme.storage_points)
    print(f"scheme: {scheme}")
    print(f"max_rate: {report.max_rate_points} ({render(report.max_rate_points)})")
    print(f"optimal: {optimum} ({render(optimum)})")
    if report.argmax_pair:
        a, b = report.argmax_pair
        print(f"argmax: {a} -> {b}")
    print(f"pairs_checked: {report.pairs_checked}")
    print(f"all_decoded: {str(report.all_decoded).lower()}")
    if not report.all_decoded:
        a, b = report.failing_pair
        print(f"failing_pair: {a} -> {b}")
        print(f"failure: {report.failure}", file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


def sweep_points(k: int, n: int, points: int) -> list[Fraction]:
    lo, hi = Fraction(n, k), Fraction(n)
    if points < 1:
        raise UsageError("--points must be at least 1")
    if points == 1:
        return [lo]
    return [lo + (hi - lo) * i / (points - 1) for i in range(points)]


def cmd_sweep(args) -> int:
    if args.n < 1 or args.k < 1 or args.n % args.k:
        raise UsageError(f"K={args.k} must divide N={args.n}")
    grid = sweep_points(args.k, args.n, args.points)
    schemes = []
    for s in grid:
        try:
            scheme = select_scheme(args.k, args.n, s)
            scheme.check_dims(args.d)
        except DivisibilityError as exc:
            raise UsageError(f"S={s}: {exc}") from None
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        schemes.append(scheme)

    rows: list[SweepRow] = []
    failed = False
    for s, scheme in zip(grid, schemes):
        try:
            report = worst_case_search(scheme, args.n, args.d, seed=args.seed, max_pairs=args.max_pairs)
        except ValueError as exc:
            raise UsageError(f"S={s}: {exc}") from None
        if not report.all_decoded:
            print(f"S={s}: {report.failure}", file=sys.stderr)
            failed = True
        rows.append(SweepRow(s, report.max_rate_points, opt_rate(args.k, args.n, s), combined_lower_bound(args.k, args.n, s)))

    header = ["S", "measured", "optimal", "lower_bound"]
    if args.exact:
        header += [f"{h}_exact" for h in header]
    with _output(args.out) as fh:
        out = _writer(fh)
        out.writerow(header)
        for row in rows:
            line = [render(v) for v in row]
            if args.exact:
                line += [str(v) for v in row]
            out.writerow(line)
    return EXIT_VIOLATION if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="codedshuffle", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, storage=True):
        p.add_argument("--k", type=int, required=True, help="number of workers (2 or 3)")
        p.add_argument("--n", type=int, required=True, help="number of data points")
        p.add_argument("--d", type=int, required=True, help="bits per data point")
        if storage:
            p.add_argument("--storage", type=str, required=True, help="storage per worker in points (p/q or decimal)")
            p.add_argument("--scheme", default="auto", help="auto, full, k2min, k3min, k3twothirds, or a+b")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--max-pairs", type=int, default=DEFAULT_MAX_PAIRS, help="enumeration cap")

    p = sub.add_parser("run", help="step a random shuffle chain and write per-iteration rates")
    common(p)
    p.add_argument("--iters", type=int, default=100)
    p.add_argument("--out", default=None)
    p.add_argument("--exact", action="store_true", help="add an exact p/q column")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("worstcase", help="exhaustive worst-case rate over all shuffle pairs")
    common(p)
    p.set_defaults(func=cmd_worstcase)

    p = sub.add_parser("sweep", help="worst-case rate across the storage axis")
    common(p, storage=False)
    p.add_argument("--points", type=int, default=5)
    p.add_argument("--out", default=None)
    p.add_argument("--exact", action="store_true", help="add exact p/q columns")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if hasattr(args, "storage"):
            args.storage = parse_storage(args.storage)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InvariantViolation as exc:
        print(f"invariant violated: {exc}", file=sys.stderr)
        return EXIT_VIOLATION


if __name__ == "__main__":
    sys.exit(main())
