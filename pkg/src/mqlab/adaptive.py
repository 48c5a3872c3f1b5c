"""Smoothness-adaptive wrapper: phased runs plus monotone label aggregation.

The refinement subroutine is run over an increasing grid of smoothness
guesses, each phase on its own slice of the shared label budget. Label sets
merge so that earlier phases (smaller guesses, larger function classes,
hence more trustworthy labels) are never overwritten: a later phase only
contributes where earlier phases left points unclaimed by the opposite
label. Smoothness classes are nested downward, so whenever some phase's
guess is below the true smoothness, the aggregate inherits its guarantees.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .grid import OverlapError, Region, region_difference, region_union, regions_intersect
from .problems import Classifier, OracleView
from .subroutine import SubroutineConfig, SubroutineResult, classifier_from, run_subroutine


@dataclass(frozen=True)
class AdaptiveConfig:
    n: float
    delta: float
    lam: float
    phases: int
    n0: float
    delta0: float
    alpha_grid: tuple[float, ...]
    confidence_log_scale: float = 1.0

    def __post_init__(self):
        if self.n < 1 or not 0 < self.delta < 1 or self.lam < 1:
            raise ValueError("need n >= 1, delta in (0,1), lam >= 1")
        if self.phases < 1 or len(self.alpha_grid) != self.phases:
            raise ValueError("alpha_grid length must equal phases >= 1")
        if any(b <= a for a, b in zip(self.alpha_grid, self.alpha_grid[1:])):
            raise ValueError("alpha_grid must be strictly increasing")
        if self.n0 * self.phases > self.n * (1 + 1e-9):
            raise ValueError("phase budgets exceed the total budget")

    @classmethod
    def from_budget(cls, n: float, delta: float, lam: float,
                    confidence_log_scale: float = 1.0) -> "AdaptiveConfig":
        """Canonical schedule: floor(log n)^3 phases on the grid i / floor(log n)^2.

        Asymptotically correct but extremely conservative: the per-phase
        budget n / floor(log n)^3 only becomes useful at very large n.
        """
        log_n = max(1, math.floor(math.log(n)))
        phases = log_n**3
        grid = tuple(i / log_n**2 for i in range(1, phases + 1))
        return cls(n=n, delta=delta, lam=lam, phases=phases, n0=n / phases,
                   delta0=delta / phases, alpha_grid=grid,
                   confidence_log_scale=confidence_log_scale)

    @classmethod
    def practical(cls, n: float, delta: float, lam: float,
                  confidence_log_scale: float = 1.0) -> "AdaptiveConfig":
        """Coarse geometric grid over [1/floor(log n), floor(log n)].

        Uses floor(sqrt(floor(log n))) phases so each phase keeps a budget
        slice large enough to resolve something at bench scales, while the
        grid still straddles the rough/smooth regimes (and contains 1 for
        odd phase counts). The canonical schedule needs budgets several
        orders larger before any phase can label a single cell.
        """
        log_n = max(2, math.floor(math.log(n)))
        phases = max(1, math.isqrt(log_n))
        if phases == 1:
            grid = (1.0,)
        else:
            expo = np.linspace(-1.0, 1.0, phases)
            grid = tuple(float(log_n**e) for e in expo)
        return cls(n=n, delta=delta, lam=lam, phases=phases, n0=n / phases,
                   delta0=delta / phases, alpha_grid=grid,
                   confidence_log_scale=confidence_log_scale)


@dataclass(frozen=True)
class PhaseRecord:
    alpha: float
    spent: int
    s0_cells: int
    s1_cells: int
    infeasible: bool
    agg_s0_volume: float
    agg_s1_volume: float


@dataclass
class AdaptiveResult:
    s0: Region
    s1: Region
    classifier: Classifier
    history: list[PhaseRecord]
    spent: int


def aggregate_step(prev0: Region, prev1: Region, s0: Region, s1: Region) -> tuple[Region, Region]:
    """One aggregation update: grow each label set by the new cells that do
    not contest the other side's earlier claims.

    Set algebra happens on footprints: incoming cells are refined to dyadic
    pieces around whatever they overlap, so results stay exact regions.
    """
    if regions_intersect(prev0, prev1):
        raise OverlapError("previous label sets overlap")
    if regions_intersect(s0, s1):
        raise OverlapError("incoming label sets overlap")
    new0 = region_union(prev0, region_difference(s0.cells(), prev1))
    new1 = region_union(prev1, region_difference(s1.cells(), prev0))
    return new0, new1


def run_adaptive(oracle, config: AdaptiveConfig,
                 subroutine: Callable[..., SubroutineResult] = run_subroutine) -> AdaptiveResult:
    """Run all phases on budget slices of a shared oracle and aggregate.

    A phase that cannot afford even its first depth contributes empty sets
    and the loop moves on; the slice cap guarantees no phase can starve the
    ones after it.
    """
    dim = oracle.problem.dim
    s0, s1 = Region(dim), Region(dim)
    history: list[PhaseRecord] = []
    spent_before = oracle.spent
    for alpha_i in config.alpha_grid:
        view = OracleView(oracle, cap=int(math.floor(config.n0)))
        sub_config = SubroutineConfig(
            n=config.n0, delta=config.delta0, alpha=alpha_i, lam=config.lam,
            confidence_log_scale=config.confidence_log_scale)
        result = subroutine(view, sub_config)
        s0, s1 = aggregate_step(s0, s1, result.s0, result.s1)
        history.append(PhaseRecord(
            alpha=alpha_i, spent=view.spent, s0_cells=len(result.s0),
            s1_cells=len(result.s1), infeasible=result.infeasible,
            agg_s0_volume=s0.volume, agg_s1_volume=s1.volume))
    return AdaptiveResult(s0=s0, s1=s1, classifier=classifier_from(s1),
                          history=history, spent=oracle.spent - spent_before)
