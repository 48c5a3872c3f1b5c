"""Closed-form sampling schedule for budgeted dyadic refinement.

All per-depth quantities used by the refinement classifier: the bias bound
``b``, the per-depth confidence ``delta_l``, the per-cell sample count ``t``,
the labeling threshold ``B``, and the diagnostic margin envelope ``Delta*``.

``log_scale`` multiplies the log(1/delta_l) confidence term in ``t`` and in
the deviation half of ``B`` jointly, which is equivalent to running the same
schedule at per-depth confidence ``delta_l ** log_scale``. The default of 1.0
keeps the fully union-bounded counts; sweeps at small budgets use a smaller
value to reach useful depths (see SubroutineConfig.confidence_log_scale).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

MAX_SAMPLES = 2**62


class ScheduleOverflow(OverflowError):
    """Sample count exceeds the representable range: configuration infeasible."""


def bias_bound(depth: int, alpha: float, lam: float, dim: int) -> float:
    """Bound on |eta(x) - eta(x_C)| over a depth-`depth` cell, at smoothness alpha."""
    a = min(alpha, 1.0)
    return lam * dim ** (a / 2.0) * 2.0 ** (-depth * alpha)


def depth_confidence(depth: int, alpha: float, dim: int, delta: float) -> float:
    return delta * 2.0 ** (-depth * (dim + 1) * max(alpha, 1.0))


def samples_per_cell_real(depth: int, alpha: float, lam: float, dim: int, delta: float,
                          log_scale: float = 1.0) -> float:
    """Un-ceiled per-cell sample count; exact input to the threshold identity."""
    if depth < 1 or alpha <= 0 or lam < 1 or not 0 < delta < 1:
        raise ValueError("need depth >= 1, alpha > 0, lam >= 1, 0 < delta < 1")
    if not 0 < log_scale <= 1:
        raise ValueError("log_scale must be in (0, 1]")
    dl = depth_confidence(depth, alpha, dim, delta)
    b = bias_bound(depth, alpha, lam, dim)
    log_term = log_scale * math.log(1.0 / dl)
    if alpha <= 1:
        return log_term / (2.0 * b * b)
    return 4.0 ** (2 * dim + 1) * (alpha + 1.0) ** (2 * dim) * log_term / (b * b)


def samples_per_cell(depth: int, alpha: float, lam: float, dim: int, delta: float,
                     log_scale: float = 1.0) -> int:
    t = samples_per_cell_real(depth, alpha, lam, dim, delta, log_scale)
    if not math.isfinite(t) or t > MAX_SAMPLES:
        raise ScheduleOverflow(f"sample count {t:.3g} exceeds limit at depth {depth}")
    return max(1, math.ceil(t))


def labeling_threshold(depth: int, alpha: float, lam: float, dim: int, delta: float,
                       log_scale: float = 1.0, ceil_t: bool = True) -> float:
    """Decision threshold B: twice the (deviation + bias) at exponent alpha^1.

    With the un-ceiled sample count this equals exactly 4 * b. Ceiling the
    count only shrinks the deviation term, so the runtime threshold is at
    most the ideal one and the labeling guarantee is preserved.
    """
    a = min(alpha, 1.0)
    b = bias_bound(depth, a, lam, dim)
    dl = depth_confidence(depth, a, dim, delta)
    log_term = log_scale * math.log(1.0 / dl)
    if ceil_t:
        t = float(samples_per_cell(depth, a, lam, dim, delta, log_scale))
    else:
        t = samples_per_cell_real(depth, a, lam, dim, delta, log_scale)
    return 2.0 * (math.sqrt(log_term / (2.0 * t)) + b)


@dataclass(frozen=True)
class DepthSchedule:
    """All schedule quantities for one depth, bundled for diagnostics."""

    depth: int
    alpha: float
    lam: float
    dim: int
    delta: float
    b: float
    delta_l: float
    t: int
    threshold: float

    @classmethod
    def at(cls, depth: int, alpha: float, lam: float, dim: int, delta: float,
           log_scale: float = 1.0) -> "DepthSchedule":
        return cls(
            depth=depth, alpha=alpha, lam=lam, dim=dim, delta=delta,
            b=bias_bound(depth, alpha, lam, dim),
            delta_l=depth_confidence(depth, alpha, dim, delta),
            t=samples_per_cell(depth, alpha, lam, dim, delta, log_scale),
            threshold=labeling_threshold(depth, alpha, lam, dim, delta, log_scale),
        )


def compute_delta_threshold(n: float, delta: float, alpha: float, lam: float, dim: int,
                            beta: float, density: str = "strong",
                            c1: float = 1.0, c3: float = 1.0) -> float:
    """Margin envelope below which labels may remain undecided at budget n.

    Diagnostic only: the constants are conservative and runtime decisions
    always use the labeling threshold, never this quantity.
    """
    if n < 2 or not 0 < delta < 1 or alpha <= 0 or lam < 1 or beta < 0:
        raise ValueError("invalid threshold inputs")
    if density not in ("strong", "unrestricted"):
        raise ValueError("density must be 'strong' or 'unrestricted'")
    log_term = math.log(2.0 * dim * lam**2 * n / delta)
    if density == "strong":
        c5 = 2.0 ** (min(alpha, 1.0) * beta) * max((c3 / c1) * 8.0**beta, 1.0)
        if alpha <= 1:
            dof = max(0.0, dim - alpha * beta)
            c7 = 2.0 * (dim + 1) * c5
            expo = alpha / (2 * alpha + dof)
            inner = c7 * lam ** max(dim / alpha, beta) * log_term / ((2 * alpha + dof) * alpha * n)
            return 6.0 * math.sqrt(dim) * inner**expo
        dof = max(0.0, dim - beta)
        c8 = 4.0 ** (2 * dim + 1) * (alpha + 1.0) ** (2 * alpha) * (dim + 1) * c5
        expo = alpha / (2 * alpha + dof)
        inner = c8 * lam ** max(dim, beta) * log_term / n
        return 4.0 ** (dim + 2) * inner**expo
    # unrestricted marginal: degrees of freedom are the full dimension
    expo = alpha / (2 * alpha + dim)
    lam_factor = lam ** (dim / (2 * alpha + dim))
    if alpha <= 1:
        inner = 2.0 * (dim + 1) * log_term / ((2 * alpha + dim) * alpha * n)
        return 6.0 * math.sqrt(dim) * lam_factor * inner**expo
    inner = 4.0 ** (2 * dim + 1) * (alpha + 1.0) ** (2 * dim) * (dim + 1) * log_term / n
    return 4.0 ** (dim + 2) * lam_factor * inner**expo
