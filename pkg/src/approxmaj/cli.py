"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 a certification came out CertFalse,
3 a certification stayed Unknown at the precision cap.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction
from typing import Any, Sequence

from . import circuit as circ
from .amplification import (
    FanInProfile,
    amplify,
    boundary_A,
    lemma1_check,
    lemma3_check,
    lemma4_check,
    lemma_sweep,
)
from .construction import explore, paper_profile, paper_w1, valiant_profile
from .inequalities import check_inequality, inequality_suite
from .numerics import DEFAULT_PRECISION, PRECISION_CAP, TriBool, iv_from_rational
from .verification import (
    exact_disagreement,
    expected_error,
    middle_band,
    monte_carlo_disagreement,
    stirling_check,
    weight_profile_csv,
    weight_slice_consistency,
)

SCHEMA = 1

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_FALSE = 2
EXIT_UNKNOWN = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def rational(text: str) -> Fraction:
    """Exact rational from ``"2/5"`` or a decimal such as ``"0.4"``."""
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not an exact rational: {text!r}") from None


def profile_arg(text: str) -> FanInProfile:
    try:
        return FanInProfile.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _positive(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be positive: {value}")
    return value


def _exit_for(verdicts: Sequence[TriBool]) -> int:
    if any(v is TriBool.CERT_FALSE for v in verdicts):
        return EXIT_FALSE
    if any(v is TriBool.UNKNOWN for v in verdicts):
        return EXIT_UNKNOWN
    return EXIT_OK


# -- output ------------------------------------------------------------------


def _flatten(prefix: str, value: Any, out: dict) -> None:
    if isinstance(value, dict):
        for k, v in value.items():
            _flatten(f"{prefix}.{k}" if prefix else str(k), v, out)
    elif isinstance(value, list) and not all(isinstance(v, (str, int, float)) for v in value):
        for i, v in enumerate(value):
            _flatten(f"{prefix}.{i}", v, out)
    elif isinstance(value, list):
        out[prefix] = ",".join(str(v) for v in value)
    else:
        out[prefix] = value


def _csv_rows(rows: list[dict]) -> str:
    flat = []
    for row in rows:
        f: dict = {}
        _flatten("", row, f)
        flat.append(f)
    header: list[str] = []
    for f in flat:
        header.extend(k for k in f if k not in header)
    buf = io.StringIO()
    writer = csv.DictWriter(buf, header, lineterminator="\n")
    writer.writeheader()
    writer.writerows(flat)
    return buf.getvalue()


def _emit(args, payload: dict, rows: list[dict] | None = None, csv_text: str | None = None) -> None:
    if args.format == "csv":
        text = csv_text if csv_text is not None else _csv_rows(rows if rows is not None else [payload])
    else:
        text = json.dumps({"schema": SCHEMA, "command": args.command_name, **payload}, indent=2) + "\n"
    if args.output and not getattr(args, "output_is_artifact", False):
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# -- subcommands -------------------------------------------------------------


def _need(args, *names: str) -> None:
    missing = [f"--{n.replace('_', '-')}" for n in names if getattr(args, n, None) is None]
    if missing:
        raise UsageError(f"{args.command_name} needs {', '.join(missing)}")


def cmd_params(args) -> int:
    _need(args, "n")
    out: dict = {"valiant_profile": str(valiant_profile(args.n)) if args.n >= 2 else None}
    if args.d is not None or args.eps is not None:
        _need(args, "d", "eps")
        out["recipe"] = paper_profile(args.n, args.d, args.eps, args.rounding).to_json()
    _emit(args, out)
    return EXIT_OK


def _p_grid(args) -> list[Fraction]:
    if args.p:
        return list(args.p)
    if args.grid is not None:
        return [Fraction(i, args.grid) for i in range(args.grid + 1)]
    raise UsageError("amplify needs --p or --grid")


def cmd_amplify(args) -> int:
    _need(args, "profile")
    tables = [amplify(args.profile, p, args.precision) for p in _p_grid(args)]
    rows = []
    for p, table in zip(_p_grid(args), tables):
        for k, r in enumerate(table.rows):
            rows.append({"p": str(p), "k": k, "a1": r.a1.to_json(), "a0": r.a0.to_json()})
    _emit(args, {"profile": str(args.profile), "tables": [t.to_json() for t in tables]}, rows)
    return EXIT_OK


def cmd_certify_lemma1(args) -> int:
    _need(args, "n", "eps")
    profile = args.profile
    if profile is None:
        _need(args, "d")
        profile = paper_profile(args.n, args.d, args.eps).profile
    report = lemma1_check(profile, args.n, args.eps, args.precision, args.cap)
    _emit(args, report.to_json())
    return _exit_for([report.cond1, report.cond2])


def _cmd_step_lemma(args, lemma: int) -> int:
    _need(args, "d", "level_index", "eps")
    if args.n is None:
        ns = [2**j for j in range(1, 41)]
    else:
        ns = [args.n]
    if args.A is not None or args.w1 is not None:
        if len(ns) != 1:
            raise UsageError("--A and --w1 need a single --n")
        n = ns[0]
        w1 = args.w1 if args.w1 is not None else paper_w1(n, args.d, args.eps)
        A = iv_from_rational(args.A, args.precision) if args.A is not None else boundary_A(lemma, w1, args.c, args.level_index, args.d, n, args.precision)
        check = (lemma3_check if lemma == 3 else lemma4_check)(w1, A, args.c, args.level_index, args.d, n, args.eps, args.precision, args.cap)
        _emit(args, {"n": n, "w1": w1, "c": str(args.c), **check.to_json()})
        return _exit_for([check.hypothesis & check.conclusion])
    rows = lemma_sweep(args.d, args.level_index, args.c, args.eps, ns, precision_bits=args.precision)
    picked = [r.lemma3 if lemma == 3 else r.lemma4 for r in rows]
    threshold = next((r.n for r, chk in zip(rows, picked) if (chk.hypothesis & chk.conclusion) is TriBool.CERT_TRUE), None)
    table = [{"n": r.n, "w1": r.w1, **chk.to_json()} for r, chk in zip(rows, picked)]
    _emit(args, {"d": args.d, "level_index": args.level_index, "c": str(args.c), "epsilon": str(args.eps), "threshold_n": threshold, "rows": table}, table)
    if len(ns) == 1:
        return _exit_for([picked[0].hypothesis & picked[0].conclusion])
    return EXIT_OK if threshold is not None else EXIT_FALSE


def cmd_certify_inequalities(args) -> int:
    _need(args, "q")
    if args.which:
        verdict = check_inequality(args.which, args.q, args.r, args.precision)
        results = [] if verdict is None else [(args.which, verdict)]
    else:
        results = inequality_suite(args.q, args.r, args.precision)
    rows = [{"inequality": name, "verdict": str(v)} for name, v in results]
    _emit(args, {"q": str(args.q), "r": None if args.r is None else str(args.r), "results": rows}, rows)
    return _exit_for([v for _, v in results])


def cmd_certify_stirling(args) -> int:
    _need(args, "n")
    verdict = stirling_check(args.n)
    _emit(args, {"n": args.n, "verdict": str(verdict)})
    return _exit_for([verdict])


def cmd_certify_middle_band(args) -> int:
    _need(args, "n", "eps")
    band = middle_band(args.n, args.eps, args.precision)
    _emit(args, band.to_json())
    return _exit_for([band.bound_holds])


def cmd_sample(args) -> int:
    _need(args, "profile", "n", "seed", "output")
    c = circ.sample_circuit(args.profile, args.n, args.seed, args.workers)
    circ.save(c, args.output, seed_only=args.seed_only)
    args.output_is_artifact = True
    _emit(args, {"path": args.output, "n": c.n, "profile": str(c.profile), "seed": c.seed, "rng_id": c.rng_id, "leaves": int(c.leaves.size)})
    return EXIT_OK


def _load(args) -> circ.Circuit:
    _need(args, "circuit")
    return circ.load(args.circuit)


def cmd_eval(args) -> int:
    c = _load(args)
    if args.x is not None:
        bits = [int(ch) for ch in args.x if ch in "01"]
        if len(bits) != len(args.x.strip()):
            raise UsageError("--x must be a 0/1 string with x_0 first")
        _emit(args, {"x": args.x, "value": circ.evaluate(c, bits), "majority": circ.majority(bits)})
        return EXIT_OK
    table = circ.truth_table(c, workers=args.workers)
    out: dict = {"n": c.n, "ones": table.count(), "entries": len(table)}
    if args.output:
        with open(args.output, "wb") as fh:
            fh.write(table.to_bytes())
        args.output_is_artifact = True
        out["path"] = args.output
    elif c.n <= 10:
        out["table"] = "".join(map(str, table.bits()))
    _emit(args, out)
    return EXIT_OK


def cmd_check(args) -> int:
    c = _load(args)
    value = exact_disagreement(c, workers=args.workers)
    _emit(args, {"mode": "exact", "n": c.n, "profile": str(c.profile), "disagreement": {"exact": str(value), "float": float(value), "width": 0}})
    return EXIT_OK


def cmd_expect(args) -> int:
    _need(args, "n", "profile")
    err = expected_error(args.profile, args.n, args.precision)
    payload = {
        "mode": "expected",
        "n": args.n,
        "profile": str(args.profile),
        "disagreement": err.to_json(),
        "note": "average over random circuits; some circuit achieves at most hi",
    }
    _emit(args, payload, csv_text=weight_profile_csv(args.profile, args.n, args.precision) if args.format == "csv" else None)
    return EXIT_OK


def cmd_estimate(args) -> int:
    _need(args, "samples", "seed")
    c = _load(args)
    report = monte_carlo_disagreement(c, args.samples, args.seed, args.confidence, workers=args.workers)
    _emit(args, report.to_json())
    return EXIT_OK


def cmd_explore(args) -> int:
    _need(args, "n", "d", "eps")
    result = explore(args.n, args.d, args.eps, args.budget, args.slack, args.precision, args.workers)
    _emit(args, result.to_json())
    return EXIT_OK if result.found else EXIT_FALSE


def cmd_slice(args) -> int:
    _need(args, "profile", "n", "m", "samples", "seed")
    report = weight_slice_consistency(args.profile, args.n, args.m, args.samples, args.seed, args.precision)
    _emit(args, report.to_json())
    return EXIT_OK


# -- parser --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n", type=_positive)
    common.add_argument("--d", type=_positive)
    common.add_argument("--eps", type=rational, help="exact rational, e.g. 2/5 or 0.4")
    common.add_argument("--profile", type=profile_arg, help='comma-separated fan-ins; "" for a single leaf')
    common.add_argument("--seed", type=int)
    common.add_argument("--samples", type=_positive)
    common.add_argument("--precision", type=_positive, default=DEFAULT_PRECISION, help="starting MPFR precision in bits")
    common.add_argument("--cap", type=_positive, default=PRECISION_CAP, help="precision ceiling for adaptive retries")
    common.add_argument("--output", help="write the report (or artifact) here")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--workers", type=_positive, default=1)

    parser = _Parser(prog="approxmaj", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name: str, func, help_text: str, parent=sub):
        p = parent.add_parser(name, parents=[common], help=help_text)
        p.set_defaults(func=func, command_name=name)
        return p

    p = add("params", cmd_params, "recipe profile and the all-2s profile")
    p.add_argument("--rounding", choices=("ceil", "round", "floor"), default="ceil")

    p = add("amplify", cmd_amplify, "per-level amplification table")
    p.add_argument("--p", type=rational, action="append", help="input probability (repeatable)")
    p.add_argument("--grid", type=_positive, help="use p = i/G for i = 0..G")

    p = sub.add_parser("certify", help="certified checks")
    csub = p.add_subparsers(dest="check", required=True, parser_class=_Parser)
    add("lemma1", cmd_certify_lemma1, "both gap conditions for a profile", csub)
    step_help = {3: "step check for A above its level bound", 4: "step check for A below its level bound"}
    for lemma, func in ((3, lambda a: _cmd_step_lemma(a, 3)), (4, lambda a: _cmd_step_lemma(a, 4))):
        q = add(f"lemma{lemma}", func, f"{step_help[lemma]}, single n or a sweep over powers of two", csub)
        q.add_argument("--level-index", type=int, dest="level_index")
        q.add_argument("--c", type=rational, default=Fraction(1))
        q.add_argument("--w1", type=int)
        q.add_argument("--A", type=rational, help="defaults to the hypothesis boundary")
    q = add("inequalities", cmd_certify_inequalities, "elementary inequality toolkit", csub)
    q.add_argument("--q", type=rational)
    q.add_argument("--r", type=rational)
    q.add_argument("--which", choices=("i", "ii", "iii", "iv", "v", "vi", "vii"))
    add("stirling", cmd_certify_stirling, "central binomial bound", csub)
    add("middle-band", cmd_certify_middle_band, "middle-band count against its bound", csub)

    p = add("sample", cmd_sample, "sample a circuit and write it to --output")
    p.add_argument("--seed-only", action="store_true", help="store the seed instead of the leaves")

    p = add("eval", cmd_eval, "evaluate a circuit on one input or on all inputs")
    p.add_argument("--circuit", help="circuit file")
    p.add_argument("--x", help="input as a 0/1 string, x_0 first")

    p = add("check", cmd_check, "exact disagreement with majority")
    p.add_argument("--circuit", help="circuit file")

    add("expect", cmd_expect, "expected disagreement over random circuits (csv: per weight)")

    p = add("estimate", cmd_estimate, "Monte Carlo disagreement estimate")
    p.add_argument("--circuit", help="circuit file")
    p.add_argument("--confidence", type=float, default=0.95)

    p = add("explore", cmd_explore, "search for a small certified profile")
    p.add_argument("--budget", type=_positive, default=2000)
    p.add_argument("--slack", type=int, default=2)

    p = add("slice", cmd_slice, "weight-slice consistency against the recursion")
    p.add_argument("--m", type=int)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ValueError, OSError, circ.CircuitFormatError) as exc:
        print(f"approxmaj {args.command_name}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
