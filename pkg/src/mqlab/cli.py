"""Command-line interface: generate problems, run experiments, audit, report.

Exit codes: 0 success, 1 invalid configuration or input, 2 infeasible budget.
The default output directory can be set with the MQLAB_OUT_DIR environment
variable; --out overrides it.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .generators import (InfeasibleDelta, InvalidFamilyParams, make_lb_strong,
                         make_lb_weak, make_smooth_problem)
from .grid import Region
from .harness import (DegenerateData, ResolutionTooCoarse, RunRecord, SweepConfig,
                      check_correct, fit_rate, run_once, sweep, theoretical_exponent)
from .problems import Problem
from .report import write_report

EXIT_OK = 0
EXIT_BAD_CONFIG = 1
EXIT_INFEASIBLE = 2


def _out_dir(args) -> Path:
    out = args.out or os.environ.get("MQLAB_OUT_DIR") or "."
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _load_problem(path: str) -> Problem:
    with open(path) as fh:
        return Problem.from_dict(json.load(fh))


def _build_problem(args) -> Problem:
    fam = args.family
    if fam in ("constant", "affine", "sin-bump", "sinusoidal-bump"):
        kw = {}
        if args.c is not None:
            kw["c"] = args.c
        if args.slope is not None:
            kw["slope"] = args.slope
        if args.amplitude is not None:
            kw["amplitude"] = args.amplitude
        if args.frequency is not None:
            kw["frequency"] = args.frequency
        name = "sinusoidal-bump" if fam in ("sin-bump", "sinusoidal-bump") else fam
        return make_smooth_problem(name, dim=args.d, alpha=args.alpha, **kw)
    if fam == "lb-strong":
        return make_lb_strong(dim=args.d, alpha=args.alpha, delta=args.delta_bump,
                              lam=args.lam, seed=args.seed)
    if fam == "lb-weak":
        return make_lb_weak(dim=args.d, alpha=args.alpha, delta=args.delta_bump,
                            lam=args.lam, beta=args.beta, seed=args.seed)
    raise InvalidFamilyParams(f"unknown family {fam!r}")


def cmd_generate(args) -> int:
    problem = _build_problem(args)
    doc = json.dumps(problem.to_dict(), sort_keys=True, indent=2)
    if args.out_file:
        Path(args.out_file).write_text(doc + "\n")
        print(f"wrote {args.out_file}")
    else:
        print(doc)
    return EXIT_OK


def cmd_run(args) -> int:
    problem = _load_problem(args.problem)
    record = run_once(
        problem, args.alg, n=args.n, seed=args.seed, delta=args.delta,
        alpha=args.alpha, lam=args.lam, lambda_surrogate=args.lambda_surrogate,
        log_scale=args.log_scale, eval_method=args.eval, eval_n=args.eval_n,
        save_regions=args.save_regions, adaptive_policy=args.adaptive_policy)
    doc = record.to_json()
    if args.out_file:
        Path(args.out_file).write_text(doc + "\n")
        print(f"wrote {args.out_file}")
    else:
        print(doc)
    return EXIT_INFEASIBLE if record.infeasible else EXIT_OK


def cmd_sweep(args) -> int:
    problem = _load_problem(args.problem)
    budgets = tuple(int(v) for v in args.budgets.split(","))
    seeds = _parse_seeds(args.seeds)
    config = SweepConfig(budgets=budgets, seeds=seeds, algorithm=args.alg,
                         delta=args.delta, alpha=args.alpha, lam=args.lam,
                         lambda_surrogate=args.lambda_surrogate,
                         log_scale=args.log_scale, eval_method=args.eval,
                         eval_n=args.eval_n, adaptive_policy=args.adaptive_policy)
    records = sweep(problem, config, threads=args.threads)
    out = _out_dir(args) / (args.name + "_records.json")
    out.write_text(json.dumps([r.to_dict(include_timing=True) for r in records],
                              sort_keys=True, indent=1) + "\n")
    print(f"wrote {out} ({len(records)} records)")
    return EXIT_OK


def cmd_audit(args) -> int:
    problem = _load_problem(args.problem)
    with open(args.record) as fh:
        data = json.load(fh)
    record = RunRecord.from_dict(data)
    if record.s0 is None or record.s1 is None:
        print("record does not contain saved regions (run with --save-regions)",
              file=sys.stderr)
        return EXIT_BAD_CONFIG
    s0 = Region.from_list(problem.dim, record.s0)
    s1 = Region.from_list(problem.dim, record.s1)
    report = check_correct(problem, s0, s1, margin=args.margin,
                           grid_depth=args.grid_depth)
    print(json.dumps({
        "weakly_correct": report.weakly_correct, "correct": report.correct,
        "grid_depth": report.grid_depth, "witnesses": report.witnesses,
    }, sort_keys=True, indent=2))
    return EXIT_OK


def cmd_report(args) -> int:
    with open(args.records) as fh:
        data = json.load(fh)
    records = [RunRecord.from_dict(d) for d in data]
    expected = None
    if records and args.expected_slope == "auto":
        p = records[0].problem["params"]
        density = "strong" if p.get("c1") else "unrestricted"
        expected = -theoretical_exponent(p["alpha"], p["beta"],
                                         records[0].problem["dim"], density)
    elif args.expected_slope is not None:
        expected = float(args.expected_slope)
    paths = write_report(records, _out_dir(args), stem=args.name,
                         make_figure=not args.no_figure, title=args.title,
                         expected_slope=expected)
    for p in (paths.records_csv, paths.plot_csv, paths.fit_csv, paths.figure):
        if p is not None:
            print(f"wrote {p}")
    if paths.fit is not None:
        print(f"slope {paths.fit.slope:.4f} "
              f"[{paths.fit.slope_lo:.4f}, {paths.fit.slope_hi:.4f}]")
    else:
        print("rate fit degenerate (fewer than 3 nonzero medians)")
    return EXIT_OK


def _parse_seeds(spec: str) -> tuple[int, ...]:
    if ":" in spec:
        lo, hi = spec.split(":")
        return tuple(range(int(lo), int(hi)))
    return tuple(int(v) for v in spec.split(","))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mqlab",
                                     description="membership-query active learning lab")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="emit a problem specification document")
    gen.add_argument("--family", required=True,
                     choices=["constant", "affine", "sin-bump", "lb-strong", "lb-weak"])
    gen.add_argument("--d", type=int, default=1)
    gen.add_argument("--alpha", type=float, default=1.0)
    gen.add_argument("--c", type=float, default=None)
    gen.add_argument("--slope", type=float, default=None)
    gen.add_argument("--amplitude", type=float, default=None)
    gen.add_argument("--frequency", type=int, default=None)
    gen.add_argument("--delta-bump", type=float, default=0.125,
                     help="bump height scale for the lower-bound families")
    gen.add_argument("--beta", type=float, default=1.0)
    gen.add_argument("--lam", type=float, default=1.0)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out-file", default=None)

    run = sub.add_parser("run", help="single run producing one record")
    run.add_argument("--problem", required=True)
    run.add_argument("--alg", choices=["subroutine", "adaptive"], default="subroutine")
    run.add_argument("--n", type=int, required=True)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--delta", type=float, default=0.05)
    run.add_argument("--alpha", type=float, default=None)
    run.add_argument("--lam", type=float, default=None)
    run.add_argument("--lambda-surrogate", action="store_true",
                     help="use log(n) in place of the smoothness constant")
    run.add_argument("--log-scale", type=float, default=1.0)
    run.add_argument("--eval", choices=["auto", "exact", "monte_carlo"], default="auto")
    run.add_argument("--eval-n", type=int, default=100_000)
    run.add_argument("--save-regions", action="store_true")
    run.add_argument("--adaptive-policy", choices=["practical", "paper"],
                     default="practical")
    run.add_argument("--out-file", default=None)

    sw = sub.add_parser("sweep", help="budget x seed grid of runs")
    sw.add_argument("--problem", required=True)
    sw.add_argument("--alg", choices=["subroutine", "adaptive"], default="subroutine")
    sw.add_argument("--budgets", required=True, help="comma-separated budgets")
    sw.add_argument("--seeds", required=True, help="lo:hi range or comma list")
    sw.add_argument("--delta", type=float, default=0.05)
    sw.add_argument("--alpha", type=float, default=None)
    sw.add_argument("--lam", type=float, default=None)
    sw.add_argument("--lambda-surrogate", action="store_true")
    sw.add_argument("--log-scale", type=float, default=1.0)
    sw.add_argument("--eval", choices=["auto", "exact", "monte_carlo"], default="auto")
    sw.add_argument("--eval-n", type=int, default=100_000)
    sw.add_argument("--adaptive-policy", choices=["practical", "paper"],
                    default="practical")
    sw.add_argument("--threads", type=int, default=1)
    sw.add_argument("--name", default="sweep")
    sw.add_argument("--out", default=None)

    au = sub.add_parser("audit", help="correctness audit of stored regions")
    au.add_argument("--problem", required=True)
    au.add_argument("--record", required=True)
    au.add_argument("--margin", type=float, default=0.0)
    au.add_argument("--grid-depth", type=int, default=None)

    rep = sub.add_parser("report", help="rate fit, tables, and figure from records")
    rep.add_argument("--records", required=True)
    rep.add_argument("--name", default="report")
    rep.add_argument("--title", default=None)
    rep.add_argument("--expected-slope", default=None,
                     help="'auto' for the theoretical exponent, or a number")
    rep.add_argument("--no-figure", action="store_true")
    rep.add_argument("--out", default=None)

    return parser


_COMMANDS = {
    "generate": cmd_generate,
    "run": cmd_run,
    "sweep": cmd_sweep,
    "audit": cmd_audit,
    "report": cmd_report,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_BAD_CONFIG if exc.code not in (0, None) else EXIT_OK
    try:
        return _COMMANDS[args.command](args)
    except (InvalidFamilyParams, InfeasibleDelta, DegenerateData,
            ResolutionTooCoarse, ValueError, FileNotFoundError,
            json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG


if __name__ == "__main__":
    sys.exit(main())
