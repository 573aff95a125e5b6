"""Command-line entry point: ``braidflow {verify,certify,trace,entropy,diagram}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .analysis import VertexBudgetExceeded
from .braid_algebra import BraidIndexError, BraidSyntaxError, BraidWord, parse_word, random_word
from .flow import FlowError, IntegratorOpts, StrandSet, trace_strands
from .generating_function import GeneratorShape, certify_rho, certify_twist
from .synthesis import (
    CertificationError,
    LayoutError,
    WarpSpec,
    build_schedule,
    certify_family_twist,
    make_layout,
)
from .twist_map import SolverError

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3

NUMERICAL_ERRORS = (SolverError, FlowError, CertificationError, VertexBudgetExceeded,
                    FloatingPointError, np.linalg.LinAlgError)

log = logging.getLogger("braidflow")


class InputError(ValueError):
    pass


def _word_from_args(args) -> BraidWord:
    if args.strands < 2:
        raise InputError("need at least 2 strands")
    if getattr(args, "random", None):
        return random_word(args.strands, args.random, args.seed)
    text = args.word if args.word is not None else ""
    try:
        return parse_word(text, args.strands)
    except (BraidSyntaxError, BraidIndexError) as exc:
        raise InputError(str(exc)) from exc


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def _opts(args) -> IntegratorOpts:
    return IntegratorOpts(steps_per_substep=args.steps)


def cmd_verify(args) -> int:
    from .extraction import verify_braid

    word = _word_from_args(args)
    report = verify_braid(word, args.subdivision, WarpSpec.from_flag(args.warp), args.method,
                          args.samples, ode_check=not args.no_ode_check, opts=_opts(args))
    _emit(json.dumps(report.to_dict(), indent=1, sort_keys=True), args.out)
    if report.error is not None:
        return EXIT_NUMERIC
    return EXIT_OK if report.match else EXIT_FAIL


def cmd_certify(args) -> int:
    if args.subdivision < 3:
        raise InputError("subdivision q must be >= 3")
    layout = make_layout(args.strands, q=args.subdivision)
    shape = GeneratorShape(args.subdivision, layout.eps, 0.0, 1, args.xi_scale)
    certs = {
        "rho": certify_rho(shape),
        "twist": certify_twist(shape),
        "family_twist": certify_family_twist(shape),
    }
    body = {
        "n": args.strands,
        "q": args.subdivision,
        "eps": layout.eps,
        "xi_scale": args.xi_scale,
        "certificates": {k: c.to_dict() for k, c in certs.items()},
        "pass": all(c.passed for c in certs.values()),
    }
    _emit(json.dumps(body, indent=1, sort_keys=True), args.out)
    return EXIT_OK if body["pass"] else EXIT_FAIL


def cmd_trace(args) -> int:
    word = _word_from_args(args)
    layout = make_layout(word.n_strands, q=args.subdivision)
    sched = build_schedule(word, layout, args.subdivision, WarpSpec.from_flag(args.warp))
    strands = trace_strands(sched, args.samples, args.method, _opts(args))
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    (out / "schedule.json").write_text(sched.to_json() + "\n")
    (out / "strands.csv").write_text(strands.to_csv())
    log.info("wrote %s and %s", out / "schedule.json", out / "strands.csv")
    return EXIT_OK


def cmd_entropy(args) -> int:
    from .analysis import entropy_estimate

    word = _word_from_args(args)
    if args.iters < 2:
        raise InputError("--iters must be >= 2")
    if args.h_max <= 0:
        raise InputError("--h-max must be positive")
    layout = make_layout(word.n_strands, q=args.subdivision)
    sched = build_schedule(word, layout, args.subdivision, WarpSpec.from_flag(args.warp))
    report = entropy_estimate(sched, args.iters, args.h_max, args.vertex_budget,
                              renormalize=args.renormalize)
    _emit(report.to_json(), args.out)
    return EXIT_OK


def cmd_diagram(args) -> int:
    from .diagram import render_svg

    if args.input:
        try:
            strands = StrandSet.from_csv(Path(args.input).read_text())
        except (OSError, ValueError, KeyError, TypeError) as exc:
            raise InputError(f"cannot read trajectory CSV: {exc}") from exc
    else:
        word = _word_from_args(args)
        layout = make_layout(word.n_strands, q=args.subdivision)
        sched = build_schedule(word, layout, args.subdivision, WarpSpec.from_flag(args.warp))
        strands = trace_strands(sched, args.samples, args.method, _opts(args))
    svg = render_svg(strands)
    if args.out:
        Path(args.out).write_text(svg)
    else:
        sys.stdout.write(svg)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-n", "--strands", type=int, default=3, help="number of strands (default 3)")
    common.add_argument("-w", "--word", default=None, help='braid word, e.g. "s1 s2^-1"')
    common.add_argument("-q", "--subdivision", type=int, default=8,
                        help="rotation steps per quarter turn (default 8; doubled until certified)")
    common.add_argument("--warp", choices=("smooth", "eq17", "none"), default="smooth")
    common.add_argument("--method", choices=("ode", "isotopy"), default="isotopy")
    common.add_argument("--samples", type=int, default=64, help="trajectory samples per sub-step")
    common.add_argument("--steps", type=int, default=200, help="RK4 steps per sub-step (ode method)")
    common.add_argument("--iters", type=int, default=14)
    common.add_argument("--h-max", type=float, default=0.01)
    common.add_argument("--vertex-budget", type=int, default=2_000_000)
    common.add_argument("--renormalize", action="store_true",
                        help="carry a sub-arc forward instead of failing when the curve outgrows the budget")
    common.add_argument("--threads", type=int, default=1,
                        help="accepted for compatibility; evaluation is vectorized in one process")
    common.add_argument("-o", "--out", default=None)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--random", type=int, default=None, metavar="LEN",
                        help="use a random word of this length drawn with --seed")
    common.add_argument("-v", "--verbose", action="store_true")
    common.add_argument("--xi-scale", type=float, default=1.0, help=argparse.SUPPRESS)

    p = argparse.ArgumentParser(prog="braidflow", description="Realize braids as Hamiltonian flows.")
    sub = p.add_subparsers(dest="command", required=True)
    sp = sub.add_parser("verify", parents=[common], help="compile, trace and read back a braid")
    sp.add_argument("--no-ode-check", action="store_true")
    sp.set_defaults(func=cmd_verify)
    sub.add_parser("certify", parents=[common], help="grid twist certificates").set_defaults(func=cmd_certify)
    sub.add_parser("trace", parents=[common], help="write schedule.json and strands.csv").set_defaults(func=cmd_trace)
    sub.add_parser("entropy", parents=[common], help="curve-growth entropy estimate").set_defaults(func=cmd_entropy)
    sp = sub.add_parser("diagram", parents=[common], help="render strands as SVG")
    sp.add_argument("-i", "--input", default=None, help="trajectory CSV from 'trace'")
    sp.set_defaults(func=cmd_diagram)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.samples < 2 or args.steps < 1 or args.threads < 1:
        print("error: --samples >= 2, --steps >= 1, --threads >= 1 required", file=sys.stderr)
        return EXIT_INPUT
    try:
        return args.func(args)
    except (InputError, LayoutError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
