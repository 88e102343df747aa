"""Command-line interface: ``permest {estimate,exact,spectrum,experiment,selftest}``.

Exit codes: 0 success, 1 selftest failure, 2 parse/configuration errors,
3 domain errors, 4 oracle size limits exceeded.
"""

from __future__ import annotations

import argparse
import json
import secrets
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import (
    ConfigurationError,
    DegenerateInputError,
    DomainError,
    MatrixParseError,
    SizeError,
)
from .matrix import DEFAULT_SEED, SeededSource
from .matrixio import read_matrix
from .report import dumps, write_text

EXIT_OK = 0
EXIT_SELFTEST = 1
EXIT_PARSE = 2
EXIT_DOMAIN = 3
EXIT_SIZE = 4


def _seed(text):
    if text == "random":
        return secrets.randbits(64)
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer or 'random', got {text!r}") from None
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return value


def _epsilon(text):
    if text == "paper":
        return text
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"epsilon must be a number or 'paper', got {text!r}") from None
    if not value > 0:
        raise argparse.ArgumentTypeError("epsilon must be positive")
    return value


def _positive_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return value


def build_parser():
    parser = argparse.ArgumentParser(prog="permest", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"permest {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_input=True):
        if needs_input:
            p.add_argument("--input", required=True, help="matrix file (.csv or .json)")
        p.add_argument("--output", help="write the report here instead of stdout")
        p.add_argument("--threads", type=_positive_int, default=1, help="worker thread cap")

    p = sub.add_parser("estimate", help="estimate the permanent of a nonnegative matrix")
    common(p)
    p.add_argument("--kind", choices=["gg", "barvinok"], default="gg")
    p.add_argument("--trials", type=_positive_int, default=100)
    p.add_argument("--aggregation", choices=["mean", "median", "single"], default="mean")
    p.add_argument("--seed", type=_seed, default=DEFAULT_SEED)
    p.add_argument("--stream", type=int, default=0)
    p.add_argument("--no-exact", action="store_true", help="skip the exact oracle")
    p.add_argument("--verbose", action="store_true", help="include per-trial values")

    p = sub.add_parser("exact", help="exact permanent")
    common(p)
    p.add_argument("--method", choices=["ryser", "naive"], default="ryser")

    p = sub.add_parser("spectrum", help="singular values and the truncated/small split")
    common(p)
    p.add_argument("--epsilon", type=_epsilon, default="paper")

    p = sub.add_parser("experiment", help="run an experiment spec (JSON)")
    common(p)

    p = sub.add_parser("selftest", help="run the built-in exhaustive oracles")
    common(p, needs_input=False)
    return parser


def _provenance(command, **params):
    return {"tool": "permest", "version": __version__, "command": command, "parameters": params}


def _emit(report, args):
    write_text(dumps(report), args.output, sys.stdout)


def _set_threads(threads):
    import numba

    numba.set_num_threads(max(1, min(threads, numba.config.NUMBA_NUM_THREADS)))


def cmd_estimate(args):
    from .estimators import EstimatorConfig, estimate_permanent

    M = read_matrix(args.input)
    cfg = EstimatorConfig(
        kind=args.kind,
        trials=args.trials,
        aggregation=args.aggregation,
        seed=SeededSource(args.seed, args.stream),
    )
    report = estimate_permanent(M, cfg, exact=None if args.no_exact else "auto", threads=args.threads)
    out = report.to_dict(verbose=args.verbose)
    out["n"] = M.rows
    out["provenance"] = _provenance(
        "estimate",
        input=args.input,
        kind=args.kind,
        trials=args.trials,
        aggregation=args.aggregation,
        seed=args.seed,
        stream=args.stream,
        exact=not args.no_exact,
        verbose=args.verbose,
    )
    _emit(out, args)
    return EXIT_OK


def cmd_exact(args):
    from .permanent import permanent_naive, permanent_ryser

    M = read_matrix(args.input)
    fn = permanent_ryser if args.method == "ryser" else permanent_naive
    value = fn(M)
    out = {
        "n": M.rows,
        "method": args.method,
        "exact_log": value.log_abs,
        "exact_sign": value.sign,
        "exact_value": value.exact_small,
        "provenance": _provenance("exact", input=args.input, method=args.method),
    }
    _emit(out, args)
    return EXIT_OK


def cmd_spectrum(args):
    from .spectrum import paper_epsilon, spectrum_split

    M = read_matrix(args.input)
    eps = paper_epsilon(M.rows) if args.epsilon == "paper" else args.epsilon
    out = spectrum_split(M, eps).to_dict()
    out["provenance"] = _provenance("spectrum", input=args.input, epsilon=args.epsilon)
    _emit(out, args)
    return EXIT_OK


def cmd_experiment(args):
    from .experiments import ExperimentSpec, run_experiment, write_experiment

    path = Path(args.input)
    text = path.read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MatrixParseError(f"experiment spec: {exc.msg}", exc.lineno, exc.colno) from None
    spec = ExperimentSpec.from_dict(doc)
    report, raws = run_experiment(spec, threads=args.threads)
    report["provenance"] = _provenance("experiment", input=args.input)
    if args.output is None and spec.outputs is None:
        write_text(dumps(report), None, sys.stdout)
    else:
        for p in write_experiment(spec, report, raws, args.output):
            print(p, file=sys.stderr)
    return EXIT_OK


def selftest_checks():
    """``(name, passed, detail)`` for each built-in oracle comparison."""
    from .estimators import unbiasedness_exhaustive
    from .linalg import distance_identity_check, log_det_distances, log_det_lu, singular_values
    from .permanent import permanent_naive, permanent_ryser
    from .spectrum import paper_epsilon, spectrum_split

    checks = []

    def check(name, ok, detail):
        checks.append((name, bool(ok), detail))

    for label, M in (
        ("identity-2", np.eye(2)),
        ("ones-3", np.ones((3, 3))),
        ("positive-3", [[1, 2, 1], [3, 4, 1], [1, 1, 2]]),
    ):
        avg, per = unbiasedness_exhaustive(M)
        check(f"unbiasedness {label}", abs(avg - per) <= 1e-10 * per, f"mean det^2={avg:.17g} per={per:.17g}")

    gen = SeededSource(DEFAULT_SEED, 1).generator()
    for k in range(5):
        M = gen.random((7, 7))
        a = permanent_ryser(M).exact_small
        b = permanent_naive(M).exact_small
        check(f"ryser vs naive #{k}", abs(a - b) <= 1e-9 * abs(b), f"{a:.17g} vs {b:.17g}")

    for k in range(3):
        A = SeededSource(DEFAULT_SEED, 10 + k).generator().standard_normal((50, 50))
        lu = log_det_lu(A).log_abs
        dist = log_det_distances(A)[0].log_abs
        svd = singular_values(A).log_abs_det
        worst = max(abs(lu - dist), abs(lu - svd))
        check(f"determinant routes #{k}", worst <= 1e-7, f"max gap {worst:.3g}")

    B = np.where(SeededSource(DEFAULT_SEED, 20).generator().random((10, 20)) < 0.5, 1.0, -1.0)
    lhs, rhs = distance_identity_check(B)
    check("distance identity", abs(lhs - rhs) <= 1e-8 * abs(rhs), f"{lhs:.17g} vs {rhs:.17g}")

    C = np.where(SeededSource(DEFAULT_SEED, 21).generator().random((40, 40)) < 0.5, 1.0, -1.0)
    summary = spectrum_split(C, paper_epsilon(40))
    gap = abs(summary.log_abs_det - log_det_lu(C).log_abs)
    check("spectrum split", gap <= 1e-9, f"gap {gap:.3g}")
    return checks


def cmd_selftest(args):
    checks = selftest_checks()
    lines = [f"{'PASS' if ok else 'FAIL'}  {name}: {detail}" for name, ok, detail in checks]
    write_text("\n".join(lines) + "\n", args.output, sys.stdout)
    return EXIT_OK if all(ok for _, ok, _ in checks) else EXIT_SELFTEST


COMMANDS = {
    "estimate": cmd_estimate,
    "exact": cmd_exact,
    "spectrum": cmd_spectrum,
    "experiment": cmd_experiment,
    "selftest": cmd_selftest,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        _set_threads(args.threads)
        return COMMANDS[args.command](args)
    except MatrixParseError as exc:
        print(f"permest: {args.input}: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (FileNotFoundError, IsADirectoryError) as exc:
        print(f"permest: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except SizeError as exc:
        print(f"permest: {exc}", file=sys.stderr)
        return EXIT_SIZE
    except (DomainError, DegenerateInputError) as exc:
        print(f"permest: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except ConfigurationError as exc:
        print(f"permest: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
