"""Command-line front end: ``l1h {gen,solve,compare,bp,eigs,check}``.

Exit codes: 0 success, 1 solver did not converge, 2 bad arguments or I/O.
Set ``L1H_LOG`` to ``quiet``, ``info`` (default) or ``debug``.
"""

from __future__ import annotations

import argparse
import io
import json
import logging
import math
import os
import sys
import tempfile
import time

from .analysis import CapacityError, check_assumption, restricted_eigs
from .core import SolverConfig, format_problem, read_problem
from .experiments import (InstanceSpec, generate_instance, run_bp, run_comparison,
                          write_long_csv)
from .solver import SOLVERS, Status, write_trace_csv

log = logging.getLogger("l1homotopy")

_LEVELS = {"quiet": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}
_OUT_OF_SCOPE = "ADG, ADGH, SpaRSA, FPC and interior-point baselines are not implemented"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _setup_logging():
    level = _LEVELS.get(os.environ.get("L1H_LOG", "info").lower(), logging.INFO)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("l1h: %(message)s"))
    log.handlers[:] = [handler]
    log.setLevel(level)
    log.propagate = False


def atomic_write(path, text: str) -> None:
    """Write to a temporary sibling and rename, so a failed run leaves no partial file."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".l1h-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _jsonable(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def dumps(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, allow_nan=False) + "\n"


def _emit_json(obj, path):
    text = dumps(obj)
    if path:
        atomic_write(path, text)
    else:
        sys.stdout.write(text)


def _trace_text(records) -> str:
    buf = io.StringIO()
    write_trace_csv(records, buf)
    return buf.getvalue()


def _method(value):
    v = value.lower()
    if v not in SOLVERS:
        raise argparse.ArgumentTypeError(f"unknown method {value!r}: use pg or pgh ({_OUT_OF_SCOPE})")
    return v


def _add_solver_flags(p, lambda_required=False):
    p.add_argument("--lambda-tgt", type=float, required=lambda_required)
    p.add_argument("--eps", type=float, default=1e-5)
    p.add_argument("--eta", type=float, default=0.7)
    p.add_argument("--delta", type=float, default=0.2)
    p.add_argument("--gamma-inc", type=float, default=2.0)
    p.add_argument("--gamma-dec", type=float, default=2.0)
    p.add_argument("--l-min", type=float, default=None,
                   help="default: largest squared column norm of A")
    p.add_argument("--max-iters", type=int, default=100_000)


def _add_instance_flags(p, with_sigma=True, required=True):
    p.add_argument("--m", type=int, required=required)
    p.add_argument("--n", type=int, required=required)
    p.add_argument("--sbar", type=int, required=required)
    if with_sigma:
        p.add_argument("--sigma", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)


def _config(args, lambda_tgt=None):
    return SolverConfig(
        lambda_tgt=args.lambda_tgt if lambda_tgt is None else lambda_tgt,
        eps=args.eps, eta=args.eta, delta=args.delta, l_min=args.l_min,
        gamma_inc=args.gamma_inc, gamma_dec=args.gamma_dec,
        max_inner_iters=args.max_iters)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="l1h", description="Proximal-gradient homotopy for l1-regularized least squares.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen", help="generate a random instance file")
    _add_instance_flags(p)
    p.add_argument("--out", required=True)

    p = sub.add_parser("solve", help="solve a problem file with PG or PGH")
    p.add_argument("--problem", required=True)
    _add_solver_flags(p, lambda_required=True)
    p.add_argument("--method", type=_method, default="pgh")
    p.add_argument("--trace")
    p.add_argument("--out")
    p.add_argument("--wall-time", action="store_true",
                   help="include wall time in the JSON summary (breaks byte-reproducibility)")

    p = sub.add_parser("compare", help="PG vs PGH on one instance")
    p.add_argument("--problem")
    _add_instance_flags(p, required=False)
    _add_solver_flags(p)
    p.add_argument("--method", type=_method, action="append",
                   help="repeatable; default both pg and pgh")
    p.add_argument("--out")
    p.add_argument("--trace", help="long-format CSV: method,stage,k,metric,value")
    p.add_argument("--method-traces", metavar="PREFIX",
                   help="write PREFIX.<method>.csv solver traces")

    p = sub.add_parser("bp", help="noise-free basis pursuit via vanishing lambda")
    _add_instance_flags(p, with_sigma=False)
    _add_solver_flags(p)
    p.set_defaults(eps=1e-9)
    p.add_argument("--ratio", type=float, default=1e-10, help="lambda_tgt / lambda0")
    p.add_argument("--out")
    p.add_argument("--trace")

    p = sub.add_parser("eigs", help="restricted eigenvalues by support enumeration")
    p.add_argument("--problem", required=True)
    p.add_argument("--s", type=int, required=True)
    p.add_argument("--budget", type=int, default=10**6)
    p.add_argument("--out")

    p = sub.add_parser("check", help="evaluate the sparse-recovery assumption")
    p.add_argument("--problem", required=True)
    p.add_argument("--lambda-tgt", type=float, required=True)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--delta-prime", type=float, required=True)
    p.add_argument("--s-tilde", type=int, required=True)
    p.add_argument("--gamma-inc", type=float, default=2.0)
    p.add_argument("--l-min", type=float, default=None)
    p.add_argument("--budget", type=int, default=10**6)
    p.add_argument("--out")
    return parser


def _log_result(label, res, seconds):
    log.info("%s status=%s iterations=%d matvecs=%d omega=%.3e time=%.3fs",
             label, res.status.value, res.iterations, res.matvecs, res.omega, seconds)


def cmd_gen(args):
    spec = InstanceSpec(args.m, args.n, args.sbar, args.sigma, args.seed)
    problem = generate_instance(spec)
    atomic_write(args.out, format_problem(problem))
    log.info("gen wrote %dx%d instance (sbar=%d, seed=%d) to %s",
             spec.m, spec.n, spec.sbar, spec.seed, args.out)
    return 0


def cmd_solve(args):
    problem = read_problem(args.problem)
    config = _config(args)
    t0 = time.perf_counter()
    res = SOLVERS[args.method](problem, config, keep_snapshots=False)
    elapsed = time.perf_counter() - t0
    if args.trace:
        atomic_write(args.trace, _trace_text(res.trace))
    if args.out:
        summary = res.summary(elapsed if args.wall_time else None)
        summary["method"] = args.method
        atomic_write(args.out, dumps(summary))
    _log_result(args.method, res, elapsed)
    return 0 if res.status is Status.CONVERGED else 1


def cmd_compare(args):
    if args.problem:
        problem, spec = read_problem(args.problem), None
    else:
        if None in (args.m, args.n, args.sbar):
            raise UsageError("compare needs --problem or all of --m, --n, --sbar")
        spec = InstanceSpec(args.m, args.n, args.sbar, args.sigma, args.seed)
        problem = generate_instance(spec)
    config = None
    if args.lambda_tgt is not None:
        config = _config(args)
    kw = {} if config is not None else dict(
        eps=args.eps, eta=args.eta, delta=args.delta, l_min=args.l_min,
        gamma_inc=args.gamma_inc, gamma_dec=args.gamma_dec, max_inner_iters=args.max_iters)
    methods = [m.upper() for m in (args.method or ["pg", "pgh"])]
    t0 = time.perf_counter()
    report = run_comparison(spec, config, methods, problem=problem, **kw)
    elapsed = time.perf_counter() - t0
    if args.trace:
        buf = io.StringIO()
        write_long_csv(report, buf)
        atomic_write(args.trace, buf.getvalue())
    if args.method_traces:
        for name, mr in sorted(report.methods.items()):
            atomic_write(f"{args.method_traces}.{name.lower()}.csv", _trace_text(mr.result.trace))
    if args.out:
        atomic_write(args.out, dumps(report.to_dict()))
    ok = True
    for name, mr in sorted(report.methods.items()):
        _log_result(name, mr.result, elapsed)
        ok &= mr.result.status is Status.CONVERGED
    return 0 if ok else 1


def cmd_bp(args):
    spec = InstanceSpec(args.m, args.n, args.sbar, 0.0, args.seed)
    kw = dict(eta=args.eta, delta=args.delta, l_min=args.l_min, gamma_inc=args.gamma_inc,
              gamma_dec=args.gamma_dec, max_inner_iters=args.max_iters)
    t0 = time.perf_counter()
    run = run_bp(spec, eps=args.eps, ratio=args.ratio, **kw)
    elapsed = time.perf_counter() - t0
    if args.trace:
        atomic_write(args.trace, _trace_text(run.result.trace))
    if args.out:
        atomic_write(args.out, dumps(run.to_dict()))
    _log_result("bp", run.result, elapsed)
    log.info("bp final recovery error %.3e", run.errors[-1])
    return 0 if run.result.status is Status.CONVERGED else 1


def cmd_eigs(args):
    problem = read_problem(args.problem)
    spectrum = restricted_eigs(problem.A, args.s, args.budget)
    _emit_json(spectrum.to_dict(), args.out)
    log.info("eigs s=%d rho_minus=%.6g rho_plus=%.6g", spectrum.s,
             spectrum.rho_minus, spectrum.rho_plus)
    return 0


def cmd_check(args):
    problem = read_problem(args.problem)
    report = check_assumption(problem, args.lambda_tgt, args.gamma, args.delta_prime,
                              args.s_tilde, args.gamma_inc, args.budget, args.l_min)
    _emit_json(report.to_dict(), args.out)
    log.info("check lambda_ok=%s re_ok=%s", report.lambda_ok, report.re_ok)
    return 0


_COMMANDS = {"gen": cmd_gen, "solve": cmd_solve, "compare": cmd_compare,
             "bp": cmd_bp, "eigs": cmd_eigs, "check": cmd_check}


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        log.error("usage error: %s", exc)
        return 2
    except (ValueError, CapacityError, OSError) as exc:
        log.error("error: %s", exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
