"""Constructors for benchmark problems with exactly known noise parameters.

Smooth families (constant / affine / sinusoidal-bump) serve as positive
controls; the lower-bound families place signed bumps along the 1/2 level
set and are the hardest instances for a given (alpha, beta). Every
constructor declares NoiseParams that the numerical verifiers below confirm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations_with_replacement
from typing import Optional

import numpy as np

from .problems import (AffineEta, BallsAtomMarginal, ConstantEta,
                       LowerBoundStrongEta, LowerBoundWeakEta, NoiseParams,
                       Problem, SinusoidalBumpEta, UniformMarginal)

MAX_TILES = 1 << 16


class InfeasibleDelta(ValueError):
    """No nearby bump scale yields an integer tile grid."""


class InvalidFamilyParams(ValueError):
    """Smooth-family parameters outside the supported range."""


def make_smooth_problem(family: str, dim: int = 1, alpha: float = 1.0, **kw) -> Problem:
    """A positive-control problem with exact declared noise parameters.

    constant:        kw c (level); Massart margin delta0 = |c - 1/2|, beta = 0.
    affine:          kw slope in (0, 1]; dim must be 1; beta = 1, c3 = 2/slope.
    sinusoidal-bump: kw amplitude in (0, 1/2], frequency >= 1; dim must be 1.
    """
    if alpha <= 0:
        raise InvalidFamilyParams("alpha must be positive")
    if family == "constant":
        c = float(kw.get("c", 0.75))
        eta = ConstantEta(value=c)
        params = NoiseParams(alpha=alpha, beta=0.0, delta0=abs(c - 0.5),
                             lam=1.0, c3=1.0, c1=1.0)
        return Problem(eta=eta, marginal=UniformMarginal(dim), params=params, dim=dim)
    if family == "affine":
        if dim != 1:
            raise InvalidFamilyParams("affine family is one-dimensional")
        slope = float(kw.get("slope", 0.4))
        if not 0 < slope <= 1:
            raise InvalidFamilyParams("slope must lie in (0, 1]")
        eta = AffineEta(slope=slope)
        params = NoiseParams(alpha=alpha, beta=1.0, delta0=0.0,
                             lam=max(1.0, slope), c3=2.0 / slope, c1=1.0)
        return Problem(eta=eta, marginal=UniformMarginal(dim), params=params, dim=dim)
    if family == "sinusoidal-bump":
        if dim != 1:
            raise InvalidFamilyParams("sinusoidal-bump family is one-dimensional")
        a = float(kw.get("amplitude", 0.3))
        f = int(kw.get("frequency", 2))
        eta = SinusoidalBumpEta(amplitude=a, frequency=f)
        lam = max(1.0, 2.0 * a * (2.0 * math.pi * f) ** alpha)
        params = NoiseParams(alpha=alpha, beta=1.0, delta0=0.0,
                             lam=lam, c3=1.0 / a, c1=1.0)
        return Problem(eta=eta, marginal=UniformMarginal(dim), params=params, dim=dim)
    raise InvalidFamilyParams(f"unknown family {family!r}")


def _snap_radius(delta: float, alpha: float, min_j: int) -> tuple[float, int]:
    """Snap the bump radius delta^(1/alpha) to a power of 1/2."""
    if delta <= 0:
        raise InfeasibleDelta("delta must be positive")
    j = round(-math.log2(delta ** (1.0 / alpha)))
    j = max(min_j, j)
    if j > 40:
        raise InfeasibleDelta("delta too small: tile grid would be degenerate")
    return 2.0 ** (-j), j


def _draw_sigma(count: int, sigma, seed) -> tuple[int, ...]:
    if sigma is not None:
        sigma = tuple(int(s) for s in sigma)
        if len(sigma) != count:
            raise ValueError(f"sigma must have length {count}")
        return sigma
    rng = np.random.default_rng(seed)
    return tuple(int(s) for s in rng.choice((-1, 1), size=count))


def make_lb_strong(dim: int, alpha: float, delta: float, lam: float = 1.0,
                   sigma=None, seed: int = 0, height: Optional[float] = None) -> Problem:
    """Hard instance under a uniform (strong-density) marginal.

    The bump scale is snapped to the dyadic grid; the bump height constant
    is the largest value in (0, 1] keeping eta inside the declared Hölder
    class (and the range inside [1/5, 4/5]), found by bisection.
    """
    if dim < 2:
        raise ValueError("the strong-density construction requires dim >= 2")
    radius, _ = _snap_radius(delta, alpha, min_j=1)
    m = int(round(1.0 / (2.0 * radius)))
    tiles = m ** (dim - 1)
    if tiles > MAX_TILES:
        raise InfeasibleDelta(f"tile count {tiles} too large")
    snapped = radius**alpha
    sig = _draw_sigma(tiles, sigma, seed)
    cap = min(1.0, 0.1 / snapped)  # keeps eta within [1/5, 4/5]

    def build(h: float) -> Problem:
        eta = LowerBoundStrongEta(alpha=alpha, radius=radius, height=h,
                                  sigma=sig, dim=dim)
        # margin mass: every column of the crossing has band width 4*eps, and
        # the whole cube sits within margin 1/4 + h*delta/2, so c3 = 4 is the
        # tight constant over the full range of eps (beta = 1)
        params = NoiseParams(alpha=alpha, beta=1.0, delta0=0.0, lam=max(1.0, lam),
                             c3=4.0, c1=1.0)
        return Problem(eta=eta, marginal=UniformMarginal(dim), params=params, dim=dim)

    h = height if height is not None else _bisect_height(build, alpha, lam, cap)
    if not 0 < h <= cap:
        raise ValueError(f"height must lie in (0, {cap}]")
    return build(h)


def make_lb_weak(dim: int, alpha: float, delta: float, lam: float = 1.0,
                 beta: float = 1.0, sigma=None, seed: int = 0,
                 height: Optional[float] = None) -> Problem:
    """Hard instance for unrestricted marginals: bump mass w plus a heavy atom.

    The marginal puts mass w uniformly on the balls where eta deviates from
    1/2 and mass 1 - w on the atom at (1, ..., 1); w = c3 (h delta / 2)^beta
    makes the declared margin bound tight.
    """
    radius, _ = _snap_radius(delta, alpha, min_j=2)
    m = int(round(0.5 / (2.0 * radius)))
    tiles = m**dim
    if tiles > MAX_TILES:
        raise InfeasibleDelta(f"tile count {tiles} too large")
    snapped = radius**alpha
    sig = _draw_sigma(tiles, sigma, seed)

    def build(h: float) -> Problem:
        c3 = 2.0**beta
        w = c3 * (0.5 * h * snapped) ** beta
        eta = LowerBoundWeakEta(alpha=alpha, radius=radius, height=h,
                                sigma=sig, dim=dim)
        marginal = BallsAtomMarginal(dim=dim, radius=radius, cells_per_axis=m, w=w)
        params = NoiseParams(alpha=alpha, beta=beta, delta0=0.0,
                             lam=max(1.0, lam), c3=c3, c1=None)
        return Problem(eta=eta, marginal=marginal, params=params, dim=dim)

    h = height if height is not None else _bisect_height(build, alpha, lam, 1.0)
    if not 0 < h <= 1:
        raise ValueError("height must lie in (0, 1]")
    return build(h)


def _bisect_height(build, alpha: float, lam: float, cap: float,
                   iters: int = 30, seed: int = 12345) -> float:
    """Largest bump height in (0, cap] whose problem passes the Hölder check.

    The bisection targets a 2% tightened constant so the returned height
    keeps slack: independent checks at the declared constant then pass for
    any pair sample, not just the one used here.
    """
    target = max(1.0, lam) * 0.98

    def ok(h: float) -> bool:
        return verify_holder(build(h), alpha, target, n_points=1500, seed=seed).passed

    if ok(cap):
        return cap
    lo, hi = 0.0, cap
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if mid <= 0:
            break
        if ok(mid):
            lo = mid
        else:
            hi = mid
    if lo == 0.0:
        raise InfeasibleDelta("no positive bump height satisfies the Hölder bound")
    return lo


# ---------------------------------------------------------------------------
# numerical verification of declared parameters
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HolderReport:
    passed: bool
    max_ratio: float
    worst_order: int


@dataclass(frozen=True)
class MarginReport:
    passed: bool
    epsilons: tuple[float, ...]
    empirical: tuple[float, ...]
    bound: tuple[float, ...]
    inner_band_mass: float


def _sample_pairs(dim: int, n: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    # half global pairs, half local pairs across dyadic scales: the worst
    # ratios of kinked bump profiles show up at small separations
    x = rng.random((n, dim))
    y = np.empty_like(x)
    y[: n // 2] = rng.random((n // 2, dim))
    scales = 2.0 ** (-rng.integers(2, 14, size=(n - n // 2, 1)))
    step = rng.standard_normal((n - n // 2, dim))
    step /= np.maximum(np.linalg.norm(step, axis=1, keepdims=True), 1e-12)
    # stay strictly inside the cube: the corner atom is a measure-zero point
    # value excluded from smoothness checks
    y[n // 2:] = np.clip(x[n // 2:] + scales * step, 0.0, 1.0 - 1e-12)
    keep = np.linalg.norm(x - y, axis=1) > 1e-9
    return x[keep], y[keep]


def _fd_gradient(problem: Problem, X: np.ndarray, h: float = 1e-5) -> np.ndarray:
    n, d = X.shape
    out = np.empty((n, d))
    for i in range(d):
        e = np.zeros(d)
        e[i] = h
        out[:, i] = (problem.eta_at(X + e) - problem.eta_at(X - e)) / (2 * h)
    return out


def _fd_second(problem: Problem, X: np.ndarray, h: float = 1e-3) -> dict:
    n, d = X.shape
    out = {}
    f0 = problem.eta_at(X)
    for i in range(d):
        ei = np.zeros(d)
        ei[i] = h
        out[(i, i)] = (problem.eta_at(X + ei) - 2 * f0 + problem.eta_at(X - ei)) / h**2
    for i, j in combinations_with_replacement(range(d), 2):
        if i == j:
            continue
        ei, ej = np.zeros(d), np.zeros(d)
        ei[i] = h
        ej[j] = h
        out[(i, j)] = (problem.eta_at(X + ei + ej) - problem.eta_at(X + ei - ej)
                       - problem.eta_at(X - ei + ej) + problem.eta_at(X - ei - ej)) / (4 * h**2)
    return out


def verify_holder(problem: Problem, alpha: float, lam: float,
                  n_points: int = 4000, seed: int = 0) -> HolderReport:
    """Empirical check of the smoothness-class membership at (alpha, lam).

    For alpha <= 1 the plain increment ratio is checked. For alpha > 1 the
    derivative sums up to order floor(alpha) are estimated by central
    differences and the top order is checked in its fractional increment
    ratio (plain oscillation when alpha is an integer).
    """
    rng = np.random.default_rng(seed)
    tol = lam * (1.0 + 1e-6) + 1e-9
    if alpha <= 1.0:
        x, y = _sample_pairs(problem.dim, n_points, rng)
        num = np.abs(problem.eta_at(x) - problem.eta_at(y))
        den = np.linalg.norm(x - y, axis=1) ** alpha
        ratios = num / den
        worst = float(np.max(ratios)) if len(ratios) else 0.0
        return HolderReport(passed=worst <= tol, max_ratio=worst, worst_order=0)

    k = min(int(math.floor(alpha)), 2)
    if math.floor(alpha) > 2:
        raise ValueError("finite-difference verification supports alpha <= 3")
    margin = 2e-3  # keep stencils inside the cube, away from the clamp kinks
    X = margin + (1 - 2 * margin) * rng.random((n_points, problem.dim))
    worst, worst_order = 0.0, 1
    grad = _fd_gradient(problem, X)
    g1 = float(np.max(np.sum(np.abs(grad), axis=1)))
    if g1 > worst:
        worst, worst_order = g1, 1
    if k >= 2:
        second = _fd_second(problem, X)
        g2 = float(np.max(sum(np.abs(v) for v in second.values())))
        if g2 > worst:
            worst, worst_order = g2, 2
    # top-order increment ratio over pairs
    x, y = _sample_pairs(problem.dim, n_points, rng)
    shift = 2e-3
    x = np.clip(x, shift, 1 - shift)
    y = np.clip(y, shift, 1 - shift)
    sep = np.linalg.norm(x - y, axis=1)
    keep = sep > 1e-6
    x, y, sep = x[keep], y[keep], sep[keep]
    if k == 1:
        dx, dy = _fd_gradient(problem, x), _fd_gradient(problem, y)
        diff = np.sum(np.abs(dx - dy), axis=1)
    else:
        sx, sy = _fd_second(problem, x), _fd_second(problem, y)
        diff = sum(np.abs(sx[key] - sy[key]) for key in sx)
    frac = alpha - k
    ratios = diff / np.maximum(sep, 1e-12) ** frac if frac > 0 else diff
    if len(ratios):
        g_top = float(np.max(ratios))
        if g_top > worst:
            worst, worst_order = g_top, k
    return HolderReport(passed=worst <= tol, max_ratio=worst, worst_order=worst_order)


def verify_margin(problem: Problem, beta: float, delta0: float, c3: float,
                  n_samples: int = 100_000, seed: int = 0) -> MarginReport:
    """Empirical check of the margin-mass bound at the declared parameters.

    Verifies that no sampled mass falls strictly inside the hard-margin band
    and that the exceedance curve stays below c3 * eps^beta up to three
    binomial standard deviations on a log grid of eps.
    """
    if n_samples < 10_000:
        raise ValueError("need at least 1e4 samples")
    rng = np.random.default_rng(seed)
    X = problem.marginal.sample(rng, n_samples)
    m = np.abs(problem.eta_at(X) - 0.5)
    inner = float(np.mean((m > 1e-12) & (m < delta0 - 1e-12)))
    eps_grid = np.logspace(-3, 0, 25)
    emp, bound = [], []
    ok = inner == 0.0
    for eps in eps_grid:
        p_hat = float(np.mean(m <= delta0 + eps))
        limit = c3 * eps**beta
        dev = 3.0 * math.sqrt(max(p_hat * (1 - p_hat), 1.0 / n_samples) / n_samples) + 3.0 / n_samples
        emp.append(p_hat)
        bound.append(limit)
        if p_hat > min(1.0, limit) + dev:
            ok = False
    return MarginReport(passed=ok, epsilons=tuple(eps_grid), empirical=tuple(emp),
                        bound=tuple(bound), inner_band_mass=inner)
