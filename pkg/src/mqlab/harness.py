"""Experiment orchestration: single runs, sweeps, audits, and rate fits.

Runs are fully determined by (problem, config, seed): label draws are
counter-based in the oracle and every auxiliary stream is derived from the
seed, so a RunRecord can be reproduced byte-for-byte. Wall-clock time is
carried for reporting but excluded from the canonical serialisation.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .adaptive import AdaptiveConfig, run_adaptive
from .grid import Region
from .problems import Classifier, LabelOracle, Problem, UnsupportedExact, excess_risk
from .subroutine import SubroutineConfig, classifier_from, run_subroutine

CSV_COLUMNS = ["n", "seed", "spent", "depth_L", "risk", "risk_ci",
               "s0_cells", "s1_cells", "wall_ms"]


class DegenerateData(ValueError):
    """Too few nonzero medians to fit a rate."""


class ResolutionTooCoarse(ValueError):
    """Audit grid is coarser than the regions being audited."""


def theoretical_exponent(alpha: float, beta: float, dim: int,
                         density: str = "strong") -> float:
    """Budget exponent of the achievable excess-risk rate for the regime."""
    if alpha <= 0 or beta < 0 or dim < 1:
        raise ValueError("need alpha > 0, beta >= 0, dim >= 1")
    if density == "strong":
        dof = max(0.0, dim - min(alpha, 1.0) * beta)
        return alpha * (beta + 1.0) / (2.0 * alpha + dof)
    if density == "unrestricted":
        return alpha * (beta + 1.0) / (2.0 * alpha + dim)
    raise ValueError("density must be 'strong' or 'unrestricted'")


@dataclass(frozen=True)
class CorrectnessReport:
    weakly_correct: bool
    correct: bool
    grid_depth: int
    witnesses: dict


def check_correct(problem: Problem, s0: Region, s1: Region, margin: float,
                  grid_depth: Optional[int] = None) -> CorrectnessReport:
    """Audit label sets against the analytic regression function.

    Checks, on the centers of a dyadic grid finer than every labeled cell:
    every point with gap above `margin` is claimed by the right set (weak
    correctness), and no claimed point has the wrong Bayes label (strong
    correctness). Returns the first few counterexamples per condition.
    """
    max_depth = max(s0.max_depth, s1.max_depth)
    if grid_depth is None:
        grid_depth = max_depth + 2
    if grid_depth < max_depth:
        raise ResolutionTooCoarse(
            f"grid depth {grid_depth} below region depth {max_depth}")
    if grid_depth * problem.dim > 24:
        raise ValueError("audit grid too large; lower grid_depth")
    side = 1 << grid_depth
    axes = [(np.arange(side) + 0.5) / side] * problem.dim
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, problem.dim)
    gap = problem.eta_at(pts) - 0.5
    in1 = s1.contains_points(pts)
    in0 = s0.contains_points(pts)
    viol = {
        "missed_pos": (gap > margin) & ~in1,
        "missed_neg": (-gap > margin) & ~in0,
        "wrong_pos": in1 & (gap <= 0),
        "wrong_neg": in0 & (gap >= 0),
    }
    witnesses = {k: pts[m][:3].tolist() for k, m in viol.items() if np.any(m)}
    weakly = not (viol["missed_pos"].any() or viol["missed_neg"].any())
    strong = weakly and not (viol["wrong_pos"].any() or viol["wrong_neg"].any())
    return CorrectnessReport(weakly_correct=weakly, correct=strong,
                             grid_depth=grid_depth, witnesses=witnesses)


@dataclass
class RunRecord:
    algorithm: str
    n: int
    seed: int
    delta: float
    alpha: float
    lam: float
    log_scale: float
    problem: dict
    spent: int
    depth: int
    risk: float
    risk_ci: float
    s0_cells: int
    s1_cells: int
    active_counts: list[int]
    infeasible: bool
    phases: Optional[list] = None
    s0: Optional[list] = None
    s1: Optional[list] = None
    wall_ms: Optional[float] = None

    def to_dict(self, include_timing: bool = False) -> dict:
        out = {
            "algorithm": self.algorithm, "n": self.n, "seed": self.seed,
            "delta": self.delta, "alpha": self.alpha, "lam": self.lam,
            "log_scale": self.log_scale, "problem": self.problem,
            "spent": self.spent, "depth": self.depth, "risk": self.risk,
            "risk_ci": self.risk_ci, "s0_cells": self.s0_cells,
            "s1_cells": self.s1_cells, "active_counts": self.active_counts,
            "infeasible": self.infeasible, "phases": self.phases,
            "s0": self.s0, "s1": self.s1,
        }
        if include_timing:
            out["wall_ms"] = self.wall_ms
        return out

    def to_json(self, include_timing: bool = False) -> str:
        return json.dumps(self.to_dict(include_timing), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "RunRecord":
        return cls(
            algorithm=d["algorithm"], n=d["n"], seed=d["seed"], delta=d["delta"],
            alpha=d["alpha"], lam=d["lam"], log_scale=d["log_scale"],
            problem=d["problem"], spent=d["spent"], depth=d["depth"],
            risk=d["risk"], risk_ci=d["risk_ci"], s0_cells=d["s0_cells"],
            s1_cells=d["s1_cells"], active_counts=list(d["active_counts"]),
            infeasible=d["infeasible"], phases=d.get("phases"),
            s0=d.get("s0"), s1=d.get("s1"), wall_ms=d.get("wall_ms"),
        )


def run_once(problem: Problem, algorithm: str, n: int, seed: int,
             delta: float = 0.05, alpha: Optional[float] = None,
             lam: Optional[float] = None, lambda_surrogate: bool = False,
             log_scale: float = 1.0, eval_method: str = "auto",
             eval_n: int = 100_000, save_regions: bool = False,
             adaptive_policy: str = "practical") -> RunRecord:
    """One seeded experiment: run the algorithm, evaluate risk, pack a record."""
    if algorithm not in ("subroutine", "adaptive"):
        raise ValueError("algorithm must be 'subroutine' or 'adaptive'")
    alpha = problem.params.alpha if alpha is None else alpha
    if lambda_surrogate:
        lam = max(1.0, math.log(n))
    elif lam is None:
        lam = max(1.0, problem.params.lam)
    oracle = LabelOracle(problem, budget=n, rng_root=seed)
    start = time.perf_counter()
    phases = None
    if algorithm == "subroutine":
        res = run_subroutine(oracle, SubroutineConfig(
            n=n, delta=delta, alpha=alpha, lam=lam, confidence_log_scale=log_scale))
        s0, s1, depth, infeasible = res.s0, res.s1, res.depth, res.infeasible
        active_counts = res.active_counts
    else:
        if adaptive_policy == "paper":
            cfg = AdaptiveConfig.from_budget(n, delta, lam, log_scale)
        elif adaptive_policy == "practical":
            cfg = AdaptiveConfig.practical(n, delta, lam, log_scale)
        else:
            raise ValueError("adaptive_policy must be 'practical' or 'paper'")
        res = run_adaptive(oracle, cfg)
        s0, s1 = res.s0, res.s1
        depth = max((c.depth for r in (s0, s1) for c in r.cells()), default=0)
        infeasible = all(r.infeasible for r in res.history)
        active_counts = []
        phases = [{"alpha": r.alpha, "spent": r.spent, "s0_cells": r.s0_cells,
                   "s1_cells": r.s1_cells, "infeasible": r.infeasible}
                  for r in res.history]
    wall_ms = (time.perf_counter() - start) * 1000.0
    clf = classifier_from(s1)
    risk, ci = _evaluate_risk(problem, clf, eval_method, eval_n, seed)
    return RunRecord(
        algorithm=algorithm, n=int(n), seed=int(seed), delta=delta, alpha=alpha,
        lam=lam, log_scale=log_scale, problem=problem.to_dict(),
        spent=oracle.spent, depth=depth, risk=risk, risk_ci=ci,
        s0_cells=len(s0), s1_cells=len(s1), active_counts=list(active_counts),
        infeasible=infeasible, phases=phases,
        s0=s0.to_list() if save_regions else None,
        s1=s1.to_list() if save_regions else None,
        wall_ms=wall_ms,
    )


def _evaluate_risk(problem: Problem, clf: Classifier, method: str,
                   eval_n: int, seed: int) -> tuple[float, float]:
    if method == "auto":
        try:
            est = excess_risk(problem, clf, "exact")
        except UnsupportedExact:
            est = excess_risk(problem, clf, "monte_carlo", eval_n, seed + 777_000_001)
    elif method == "exact":
        est = excess_risk(problem, clf, "exact")
    elif method == "monte_carlo":
        est = excess_risk(problem, clf, "monte_carlo", eval_n, seed + 777_000_001)
    else:
        raise ValueError("eval_method must be 'auto', 'exact', or 'monte_carlo'")
    return est.value, est.half_width


@dataclass(frozen=True)
class SweepConfig:
    budgets: tuple[int, ...]
    seeds: tuple[int, ...]
    algorithm: str = "subroutine"
    delta: float = 0.05
    alpha: Optional[float] = None
    lam: Optional[float] = None
    lambda_surrogate: bool = False
    log_scale: float = 1.0
    eval_method: str = "auto"
    eval_n: int = 100_000
    adaptive_policy: str = "practical"

    def __post_init__(self):
        if len(self.budgets) == 0 or len(self.seeds) == 0:
            raise ValueError("budgets and seeds must be nonempty")
        if any(b <= a for a, b in zip(self.budgets, self.budgets[1:])):
            raise ValueError("budgets must be strictly increasing")


def sweep(problem: Problem, config: SweepConfig, threads: int = 1) -> list[RunRecord]:
    """All (budget, seed) runs; records come back sorted by (n, seed)."""
    jobs = [(n, s) for n in config.budgets for s in config.seeds]

    def job(args):
        n, s = args
        return run_once(problem, config.algorithm, n, s, delta=config.delta,
                        alpha=config.alpha, lam=config.lam,
                        lambda_surrogate=config.lambda_surrogate,
                        log_scale=config.log_scale, eval_method=config.eval_method,
                        eval_n=config.eval_n, adaptive_policy=config.adaptive_policy)

    if threads <= 1:
        records = [job(j) for j in jobs]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(job, jobs))
    return sorted(records, key=lambda r: (r.n, r.seed))


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    slope_lo: float
    slope_hi: float
    n_budgets: int
    dropped_zero_budgets: int


def fit_rate(records: Sequence[RunRecord], n_boot: int = 1000, seed: int = 0) -> RateFit:
    """OLS slope of log median risk against log budget, with a bootstrap band.

    Budgets whose median risk is exactly zero cannot enter the log fit and
    are dropped (reported in the fit). The band resamples seeds, jointly
    across budgets, 2.5%/97.5%.
    """
    by_n: dict[int, dict[int, float]] = {}
    for r in records:
        by_n.setdefault(r.n, {})[r.seed] = r.risk
    budgets = sorted(by_n)
    med = {n: float(np.median(list(by_n[n].values()))) for n in budgets}
    kept = [n for n in budgets if med[n] > 0.0]
    dropped = len(budgets) - len(kept)
    if len(kept) < 3:
        raise DegenerateData(f"only {len(kept)} budgets with nonzero median risk")
    x = np.log(np.array(kept, dtype=float))
    y = np.log(np.array([med[n] for n in kept]))
    slope, intercept = np.polyfit(x, y, 1)
    rng = np.random.default_rng(seed)
    seed_lists = {n: sorted(by_n[n]) for n in kept}
    boots = []
    for _ in range(n_boot):
        ys = []
        xs = []
        for n in kept:
            seeds = seed_lists[n]
            pick = rng.integers(0, len(seeds), size=len(seeds))
            m = float(np.median([by_n[n][seeds[i]] for i in pick]))
            if m > 0:
                xs.append(math.log(n))
                ys.append(math.log(m))
        if len(xs) >= 3:
            boots.append(np.polyfit(xs, ys, 1)[0])
    if boots:
        lo, hi = np.quantile(boots, [0.025, 0.975])
    else:
        lo = hi = slope
    return RateFit(slope=float(slope), intercept=float(intercept),
                   slope_lo=float(lo), slope_hi=float(hi),
                   n_budgets=len(kept), dropped_zero_budgets=dropped)


def records_to_csv(records: Iterable[RunRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(CSV_COLUMNS)
    for r in records:
        wall = "" if r.wall_ms is None else f"{r.wall_ms:.3f}"
        writer.writerow([r.n, r.seed, r.spent, r.depth, repr(r.risk),
                         repr(r.risk_ci), r.s0_cells, r.s1_cells, wall])
    return buf.getvalue()


def quantile_table(records: Sequence[RunRecord]) -> list[tuple[int, float, float, float]]:
    """Per-budget (n, q25, q50, q75) of risk across seeds."""
    by_n: dict[int, list[float]] = {}
    for r in records:
        by_n.setdefault(r.n, []).append(r.risk)
    out = []
    for n in sorted(by_n):
        q25, q50, q75 = np.quantile(by_n[n], [0.25, 0.5, 0.75])
        out.append((n, float(q25), float(q50), float(q75)))
    return out
