"""Command-line frontend.

Subcommands: verify (property suites), sample (cone batches to CSV),
solve (config -> field file + trace CSV), estimate (field or config ->
estimate CSV), report (family of configs -> family table). Exit status 0
on success, 1 on suite failure or solver trouble, 2 on usage/config
errors. Diagnostics go to standard error.
"""
from __future__ import annotations

import argparse
import sys

from . import estimates, expr
from .cones import Cone, sample_cone, batch_to_csv
from .config import load_config
from .errors import (
    ConeViolationError,
    ConfigError,
    InstanceError,
    LinearSolveError,
    NonConvergenceError,
    SamplingExhaustedError,
)
from .grid import read_field, write_field
from .solver import newton_solve
from .suites import Tolerances, run_suites
from .symfun import SumHessianParams


def _add_params_flags(cmd: argparse.ArgumentParser) -> None:
    cmd.add_argument("--n", type=int, required=True, help="eigenvalue count / dimension")
    cmd.add_argument("--k", type=int, required=True, help="operator order")
    cmd.add_argument("--alpha", type=float, default=0.0, help="lower-order weight (>= 0)")
    cmd.add_argument("--count", type=int, default=1000, help="sample count")
    cmd.add_argument("--seed", type=int, default=0, help="RNG seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sumhessian")
    sub = parser.add_subparsers(dest="command", required=True)

    verify = sub.add_parser("verify", help="run the identity/inequality suites")
    _add_params_flags(verify)

    sample = sub.add_parser("sample", help="rejection-sample a cone batch to CSV")
    _add_params_flags(sample)
    sample.add_argument("--cone", choices=[c.value for c in Cone], default=Cone.GAMMA_TILDE.value)
    sample.add_argument("--out", default="-", help="output CSV path ('-' for stdout)")

    solve = sub.add_parser("solve", help="solve a Dirichlet instance from a config file")
    solve.add_argument("config", help="run configuration file")
    solve.add_argument("--out", default=None, help="override the configured field output path")

    estimate = sub.add_parser("estimate", help="estimate quantities for a field or config")
    estimate.add_argument("input", help="field file, or a .cfg run configuration (solved first)")
    estimate.add_argument("--beta", default=None,
                          help="comma-separated weight exponents (default 1,2,4 or the config's)")
    estimate.add_argument("--out", default="-", help="output CSV path ('-' for stdout)")

    report = sub.add_parser("report", help="family table over several configs")
    report.add_argument("configs", nargs="+", help="run configuration files")
    report.add_argument("--out", default="-", help="output CSV path ('-' for stdout)")
    return parser


def _open_out(path: str):
    if path == "-":
        return sys.stdout, False
    return open(path, "w"), True


def _cmd_verify(args) -> int:
    params = SumHessianParams(n=args.n, k=args.k, alpha=args.alpha)
    results = run_suites(params, count=args.count, seed=args.seed, tol=Tolerances())
    failed = 0
    for res in results:
        print(res.line())
        if not res.passed:
            failed += 1
    if failed:
        print(f"{failed} suite(s) failed", file=sys.stderr)
        return 1
    return 0


def _cmd_sample(args) -> int:
    params = SumHessianParams(n=args.n, k=args.k, alpha=args.alpha)
    batch = sample_cone(Cone(args.cone), params, args.count, args.seed)
    stream, close = _open_out(args.out)
    try:
        batch_to_csv(batch, stream)
    finally:
        if close:
            stream.close()
    return 0


def _solve_from_config(cfg):
    dom = cfg.domain()
    return newton_solve(dom, cfg.params, cfg.rhs(), cfg.boundary(), cfg.solve_config())


def _write_trace(result, path: str) -> None:
    with open(path, "w") as stream:
        stream.write("iteration,residual,step,admissible\n")
        for entry in result.trace:
            stream.write(
                f"{entry.iteration},{entry.residual!r},{entry.step!r},{str(entry.admissible).lower()}\n"
            )


def _cmd_solve(args) -> int:
    cfg = load_config(args.config)
    result = _solve_from_config(cfg)
    out_path = args.out or cfg.output
    with open(out_path, "w") as stream:
        write_field(result.field, stream)
    _write_trace(result, out_path + ".trace.csv")
    print(f"iterations={result.iterations} residual={result.residual:.3e} "
          f"admissible={result.admissible} field={out_path}")
    if not result.converged(cfg.tol):
        print(f"solver did not reach tol={cfg.tol:g}", file=sys.stderr)
        return 1
    return 0


def _cmd_estimate(args) -> int:
    betas = tuple(float(v) for v in args.beta.split(",")) if args.beta else None
    p_args = {}
    if args.input.endswith(".cfg"):
        cfg = load_config(args.input)
        result = _solve_from_config(cfg)
        if not result.converged(cfg.tol):
            print("solver did not converge; refusing to report estimates", file=sys.stderr)
            return 1
        fld = result.field
        betas = betas or cfg.betas
        p_args = {"p_beta": cfg.p_beta, "p_a": cfg.p_a, "p_big_a": cfg.p_big_a}
    else:
        with open(args.input) as stream:
            fld = read_field(stream)
    report = estimates.build_report(args.input, fld, betas or (1.0, 2.0, 4.0), **p_args)
    stream, close = _open_out(args.out)
    try:
        estimates.write_reports([report], stream)
    finally:
        if close:
            stream.close()
    return 0


def _cmd_report(args) -> int:
    reports = []
    status = 0
    for path in args.configs:
        cfg = load_config(path)
        result = _solve_from_config(cfg)
        if not result.converged(cfg.tol):
            print(f"{path}: solver did not converge", file=sys.stderr)
            status = 1
            continue
        reports.append(estimates.build_report(path, result.field, cfg.betas,
                                              cfg.p_beta, cfg.p_a, cfg.p_big_a))
    if not reports:
        print("no converged instances to report", file=sys.stderr)
        return 1
    stream, close = _open_out(args.out)
    try:
        estimates.write_reports(reports, stream, family_max=True)
    finally:
        if close:
            stream.close()
    return status


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "verify": _cmd_verify,
        "sample": _cmd_sample,
        "solve": _cmd_solve,
        "estimate": _cmd_estimate,
        "report": _cmd_report,
    }
    try:
        return handlers[args.command](args)
    except (ConfigError, expr.ExprError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NonConvergenceError, LinearSolveError, ConeViolationError,
            InstanceError, SamplingExhaustedError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
