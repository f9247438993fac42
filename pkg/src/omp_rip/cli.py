"""``omp-rip`` command line: certify, recover, verify, sweep.

Exit codes: 0 success, 2 input error, 3 enumeration budget exceeded,
4 solver failure, 5 verification failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

from .linalg import as_support, format_csv, read_csv
from .objective import SolverError, load_problem
from .omp import OmpConfig, omp_run
from .rsc import BudgetExceeded, build_profile, enumeration_budget
from .theory import SLACK, corollary1_check

EXIT_OK, EXIT_INPUT, EXIT_BUDGET, EXIT_SOLVER, EXIT_VERIFY = 0, 2, 3, 4, 5

log = logging.getLogger("omp_rip")


class InputError(ValueError):
    pass


def _json_safe(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    return obj


def dump_json(obj) -> str:
    return json.dumps(_json_safe(obj), indent=2, sort_keys=True) + "\n"


def _emit(text: str, path) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _cell(v) -> str:
    if v is None:
        return ""
    return repr(v) if isinstance(v, float) else str(v)


def _int_list(text: str) -> list[int]:
    """``"2,4,8"`` or a ``start:stop:step`` range (stop inclusive)."""
    text = text.strip()
    if not text:
        return []
    try:
        if ":" in text:
            parts = [int(v) for v in text.split(":")]
            start, stop = parts[0], parts[1]
            step = parts[2] if len(parts) > 2 else 1
            if step <= 0:
                raise ValueError
            return list(range(start, stop + 1, step))
        return [int(v) for v in text.split(",")]
    except ValueError:
        raise InputError(f"bad integer list {text!r}") from None


# --- subcommands -------------------------------------------------------------


def cmd_certify(args) -> int:
    if args.format not in ("json", "csv"):
        raise InputError("certify writes json or csv")
    A = read_csv(args.matrix_path)
    if args.mode == "sampled" and args.seed is None:
        raise InputError("sampled mode needs --seed")
    if args.s_max < 1:
        raise InputError("--s-max must be >= 1")
    d = A.shape[1]
    profile = build_profile(
        A, min(args.s_max, d), args.mode, trials=args.trials, seed=args.seed,
        budget=enumeration_budget(), jobs=args.jobs,
    )
    verdicts = []
    for kbar in range(1, args.s_max // 31 + 1):
        v = corollary1_check(profile(kbar)[1], profile(31 * kbar)[0], kbar)
        verdicts.append({"kbar": kbar, "mode": args.mode, **v.to_dict()})

    if args.format == "csv":
        cols = ("s", "rho_minus", "rho_plus", "delta", "mode", "sample_count")
        lines = [",".join(cols)]
        for lv in profile.to_list():
            lines.append(",".join(_cell(lv[c]) for c in cols))
        text = "\n".join(lines) + "\n"
    else:
        text = dump_json({"rows": A.shape[0], "cols": d, "levels": profile.to_list(), "corollary1": verdicts})
    _emit(text, args.output)
    return EXIT_OK


def cmd_recover(args) -> int:
    if args.format != "csv":
        raise InputError("recover writes the iterate as csv (trace is always json)")
    obj = load_problem(args.problem_path)
    try:
        F0 = as_support(_int_list(args.f0_indices), obj.dimension)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    if args.k0 < 0:
        raise InputError("--k0 must be nonnegative")
    result = omp_run(obj, OmpConfig(k0=args.k0, F0=F0, early_stop_grad_tol=args.early_stop_grad_tol))
    _emit(dump_json(result.trace_records()), args.trace_path)
    _emit(format_csv(result.x), args.output)
    log.info("objective %.6g after %d iterations", result.objective_values[-1], result.iterations)
    return EXIT_OK


def cmd_verify(args) -> int:
    from .suites import SUITES, run_suite

    if args.format != "json":
        raise InputError("verify writes json")
    if args.instances < 1:
        raise InputError("--instances must be >= 1")
    names = list(SUITES) if args.suite == "all" else [args.suite]
    suites = {name: run_suite(name, args.instances, args.seed, args.jobs) for name in names}
    aggregate = {
        "instances": sum(len(r.instances) for r in suites.values()),
        "failures": sum(r.failures for r in suites.values()),
        "max_violation": max(r.max_violation for r in suites.values()),
    }
    report = {
        "suites": {n: {"aggregate": r.aggregate(), "instances": r.instances} for n, r in suites.items()},
        "aggregate": aggregate,
    }
    _emit(dump_json(report), args.output)
    for n, r in suites.items():
        agg = r.aggregate()
        print(f"{n}: instances={agg['instances']} failures={agg['failures']} "
              f"max_violation={agg['max_violation']:.3e}", file=sys.stderr)
    if aggregate["max_violation"] > SLACK:
        worst = max((r.worst() for r in suites.values()), key=lambda w: w["max_violation"])
        print(f"verification failed; worst instance seed={worst['seed']} "
              f"(replay with --instances 1 --seed {worst['seed']})", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


def cmd_sweep(args) -> int:
    from .harness import parse_profile, phase_sweep

    if args.format != "csv":
        raise InputError("sweep writes csv (summary via --summary-path)")
    kbars, n_grid = _int_list(args.kbars), _int_list(args.n_grid)
    if not kbars or not n_grid or args.trials_per_cell < 1 or args.d < 1:
        raise InputError("empty or invalid sweep grid")
    if any(k < 0 or k > args.d for k in kbars) or any(n < 1 for n in n_grid):
        raise InputError("grid values out of range")
    try:
        parse_profile(args.profile)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    table = phase_sweep(
        args.d, kbars, n_grid, args.trials_per_cell, k0_rule=args.k0_rule, profile=args.profile,
        noise_level=args.noise_level, seed=args.seed, sensing=args.sensing,
        normalize_columns=args.normalize_columns, jobs=args.jobs,
    )
    _emit(table.to_csv(), args.output)
    if args.summary_path:
        Path(args.summary_path).write_text(dump_json(table.summary()))
    return EXIT_OK


# --- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--jobs", type=int, default=1, help="worker processes (output does not depend on it)")
    common.add_argument("--output", default=None, help="output path (stdout if omitted)")
    common.add_argument("--format", choices=("json", "csv"), default=None)
    common.add_argument("-v", "--verbose", action="count", default=0)

    p = argparse.ArgumentParser(prog="omp-rip", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("certify", parents=[common], help="restricted eigenvalue constants of a matrix")
    c.add_argument("--matrix-path", required=True)
    c.add_argument("--s-max", type=int, required=True)
    c.add_argument("--mode", choices=("exact", "sampled"), default="exact")
    c.add_argument("--trials", type=int, default=1000)
    c.add_argument("--seed", type=int, default=None, help="required in sampled mode")
    c.set_defaults(func=cmd_certify, default_format="json")

    r = sub.add_parser("recover", parents=[common], help="run OMP on a problem file")
    r.add_argument("--problem-path", required=True)
    r.add_argument("--k0", type=int, required=True)
    r.add_argument("--f0-indices", default="", help="comma-separated initial feature set")
    r.add_argument("--trace-path", required=True)
    r.add_argument("--early-stop-grad-tol", type=float, default=None)
    r.set_defaults(func=cmd_recover, default_format="csv")

    v = sub.add_parser("verify", parents=[common], help="randomized checks of the recovery bounds")
    v.add_argument("suite", choices=("lemmas", "theorem1", "corollaries", "all"))
    v.add_argument("--instances", type=int, default=100)
    v.add_argument("--seed", type=int, required=True)
    v.set_defaults(func=cmd_verify, default_format="json")

    w = sub.add_parser("sweep", parents=[common], help="phase-transition sweep over (kbar, n)")
    w.add_argument("--d", type=int, required=True)
    w.add_argument("--kbars", required=True, help="e.g. 2,4,8")
    w.add_argument("--n-grid", required=True, help="e.g. 20,40,60 or 10:120:5")
    w.add_argument("--trials-per-cell", type=int, default=100)
    w.add_argument("--k0-rule", choices=("exact_k", "30k"), default="30k")
    w.add_argument("--profile", default="flat", help="flat or decay(RATE)")
    w.add_argument("--noise-level", type=float, default=0.0)
    w.add_argument("--sensing", choices=("gaussian", "identity"), default="gaussian")
    w.add_argument("--normalize-columns", action="store_true")
    w.add_argument("--summary-path", default=None)
    w.add_argument("--seed", type=int, required=True)
    w.set_defaults(func=cmd_sweep, default_format="csv")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.format is None:
        args.format = args.default_format
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except BudgetExceeded as exc:
        print(f"error: {exc}; use --mode sampled or raise OMP_RIP_BUDGET", file=sys.stderr)
        return EXIT_BUDGET
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (ValueError, KeyError, OSError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
