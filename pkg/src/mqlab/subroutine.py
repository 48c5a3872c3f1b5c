"""Budgeted breadth-first dyadic refinement with optimistic cell labeling.

At each depth every active cell is sampled at its center a scheduled number
of times; cells whose empirical gap from 1/2 clears the labeling threshold
are committed to a label set, the rest are split. The loop guard reserves
the full-smoothness per-cell count before each depth, so the run can never
overdraw its budget; for smoothness guesses above 1 the surplus reservation
funds a final kernel-regression pass over the still-ambiguous cells.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product
from typing import Optional

import numpy as np

from .grid import (MAX_DEPTH, Cell, Region, children_coords, sample_uniform_inflated,
                   subcell_coords)
from .kernel import LegendreKernel, kernel_estimate
from .problems import Classifier
from .schedule import ScheduleOverflow, labeling_threshold, samples_per_cell

_KERNEL_STREAM_TAG = 9001


@dataclass(frozen=True)
class SubroutineConfig:
    n: float
    delta: float
    alpha: float
    lam: float = 1.0
    # multiplies the log(1/delta_l) term of the schedule; 1.0 is the fully
    # union-bounded count, smaller values trade per-cell certainty for depth
    confidence_log_scale: float = 1.0
    depth_cap: Optional[int] = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("budget must be at least 1")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.lam < 1:
            raise ValueError("lam must be >= 1")
        if not 0 < self.confidence_log_scale <= 1:
            raise ValueError("confidence_log_scale must lie in (0, 1]")


@dataclass
class SubroutineResult:
    s0: Region
    s1: Region
    depth: int
    spent: int
    active_counts: list[int]
    infeasible: bool = False
    depth_capped: bool = False
    unresolved: list[Cell] = field(default_factory=list)
    trace: Optional[dict] = None


def classifier_from(s1: Region) -> Classifier:
    return Classifier(positive_region=s1)


def run_subroutine(oracle, config: SubroutineConfig, trace: bool = False) -> SubroutineResult:
    problem = getattr(oracle, "problem")
    d = problem.dim
    cap = config.depth_cap if config.depth_cap is not None else MAX_DEPTH // d
    a_cap = min(config.alpha, 1.0)
    scale = config.confidence_log_scale
    args = (config.lam, d, config.delta)

    s0, s1 = Region(d), Region(d)
    spent_before = oracle.spent
    t1 = samples_per_cell(1, a_cap, *args, scale)
    charge = (1 << d) * t1
    root = Cell(0, (0,) * d)
    if charge > config.n:
        return SubroutineResult(s0, s1, depth=0, spent=0, active_counts=[],
                                infeasible=True, unresolved=[root],
                                trace={} if trace else None)

    coords = np.array(list(product(range(2), repeat=d)), dtype=np.int64)
    level = 1
    counts: list[int] = []
    last_split = np.empty((0, d), dtype=np.int64)
    capped = False
    history: dict[int, dict] = {}

    while coords.shape[0] > 0:
        try:
            t_guard = samples_per_cell(level, config.alpha, *args, scale)
        except ScheduleOverflow:
            break
        if charge + coords.shape[0] * t_guard > config.n:
            break
        if level > cap:
            capped = True
            break
        t_level = samples_per_cell(level, a_cap, *args, scale)
        centers = (coords + 0.5) * 2.0 ** (-level)
        ones = oracle.query_counts(centers, t_level)
        eta_hat = ones / t_level
        threshold = labeling_threshold(level, config.alpha, *args, scale)
        split = np.abs(eta_hat - 0.5) <= threshold
        pos = ~split & (eta_hat >= 0.5)
        neg = ~split & (eta_hat < 0.5)
        s1.add_many(level, coords[pos])
        s0.add_many(level, coords[neg])
        counts.append(int(coords.shape[0]))
        if trace:
            history[level] = {"coords": coords.copy(), "split": split.copy(),
                              "eta_hat": eta_hat.copy()}
        last_split = coords[split]
        kids = children_coords(last_split) if last_split.shape[0] else \
            np.empty((0, d), dtype=np.int64)
        level += 1
        if kids.shape[0]:
            try:
                charge += kids.shape[0] * samples_per_cell(level, a_cap, *args, scale)
            except ScheduleOverflow:
                break
        coords = kids

    final_depth = level - 1
    unresolved = [Cell(level, tuple(int(v) for v in row)) for row in coords]

    if config.alpha > 1.0 and final_depth >= 1 and last_split.shape[0]:
        unresolved = _kernel_pass(oracle, config, final_depth, last_split, s0, s1)

    return SubroutineResult(
        s0, s1, depth=final_depth, spent=oracle.spent - spent_before,
        active_counts=counts, depth_capped=capped, unresolved=unresolved,
        trace=history if trace else None,
    )


def _kernel_pass(oracle, config: SubroutineConfig, depth: int,
                 split_coords: np.ndarray, s0: Region, s1: Region) -> list[Cell]:
    """Kernel labeling of the subcells of cells left ambiguous at exit depth.

    Each ambiguous cell is resampled uniformly on its inflated cell; a
    higher-order kernel estimate is evaluated at the centers of its subcells
    on the finer grid matched to the smoothness guess, and subcells clearing
    the (symmetric) bias threshold are labeled. The budget for this pass is
    exactly what the loop guard reserved at the exit depth.
    """
    d = oracle.problem.dim
    t_pass = samples_per_cell(depth, config.alpha, config.lam, d, config.delta,
                              config.confidence_log_scale)
    sub_depth = min(max(depth, int(math.floor(depth * config.alpha))), MAX_DEPTH // d)
    threshold = 4.0 ** (d + 1) * config.lam * 2.0 ** (-config.alpha * depth)
    kern = LegendreKernel(config.alpha, d)
    dead: list[Cell] = []
    for row in split_coords:
        cell = Cell(depth, tuple(int(v) for v in row))
        stream = np.random.default_rng(
            [oracle.rng_root, _KERNEL_STREAM_TAG, depth, *cell.coords])
        points = sample_uniform_inflated(cell, stream, t_pass)
        labels = oracle.query_labels(points)
        subs = subcell_coords(row[None, :], depth, sub_depth)
        centers = (subs + 0.5) * 2.0 ** (-sub_depth)
        est = kernel_estimate(kern, cell, points, labels, centers)
        gap = est - 0.5
        for sub_row, g in zip(subs, gap):
            sub = Cell(sub_depth, tuple(int(v) for v in sub_row))
            if g > threshold:
                s1.add(sub)
            elif g < -threshold:
                s0.add(sub)
            else:
                dead.append(sub)
    return dead
