"""Synthetic classification problems with analytically known structure.

A problem is a regression function eta (one of a closed set of analytic
variants), a marginal over [0,1]^d, and its declared noise parameters.
Keeping the variants closed means Bayes labels and exact excess risk are
always available, so correctness claims can be checked against ground truth
rather than against another estimator.

eta is extended to all of R^d by clamping coordinates to the unit cube;
the label oracle therefore answers at arbitrary query points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .grid import Region


class BudgetExhausted(RuntimeError):
    """A label was requested past the oracle's budget."""


class UnsupportedExact(ValueError):
    """No closed form for this problem/classifier pair; use monte_carlo."""


@dataclass(frozen=True)
class NoiseParams:
    alpha: float
    beta: float
    delta0: float
    lam: float
    c3: float
    c1: Optional[float] = None  # present iff the marginal is strong-density

    def __post_init__(self):
        if self.alpha <= 0 or self.beta < 0 or self.delta0 < 0:
            raise ValueError("need alpha > 0, beta >= 0, delta0 >= 0")
        if self.lam < 1 or self.c3 <= 0:
            raise ValueError("need lam >= 1 and c3 > 0")
        if self.c1 is not None and self.c1 <= 0:
            raise ValueError("c1 must be positive when present")

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "beta": self.beta, "delta0": self.delta0,
                "lam": self.lam, "c3": self.c3, "c1": self.c1}

    @classmethod
    def from_dict(cls, d: dict) -> "NoiseParams":
        return cls(alpha=d["alpha"], beta=d["beta"], delta0=d["delta0"],
                   lam=d["lam"], c3=d["c3"], c1=d.get("c1"))


def _clamp01(X: np.ndarray) -> np.ndarray:
    return np.clip(X, 0.0, 1.0)


# ---------------------------------------------------------------------------
# regression function variants
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConstantEta:
    tag = "constant"
    value: float

    def __post_init__(self):
        if not 0.0 <= self.value <= 1.0:
            raise ValueError("constant value must lie in [0, 1]")

    def eval(self, X: np.ndarray) -> np.ndarray:
        return np.full(X.shape[0], self.value)

    def to_dict(self) -> dict:
        return {"variant": self.tag, "value": self.value}


@dataclass(frozen=True)
class AffineEta:
    """eta(x) = 1/2 + slope * (x_1 - 1/2), coordinates clamped to the cube."""

    tag = "affine"
    slope: float

    def __post_init__(self):
        if not 0.0 < abs(self.slope) <= 1.0:
            raise ValueError("slope must be nonzero with |slope| <= 1")

    def eval(self, X: np.ndarray) -> np.ndarray:
        x = _clamp01(X[:, 0])
        return 0.5 + self.slope * (x - 0.5)

    def to_dict(self) -> dict:
        return {"variant": self.tag, "slope": self.slope}


@dataclass(frozen=True)
class SinusoidalBumpEta:
    """eta(x) = 1/2 + a sin(2 pi f x_1); one-dimensional oscillating boundary."""

    tag = "sinusoidal-bump"
    amplitude: float
    frequency: int

    def __post_init__(self):
        if not 0.0 < self.amplitude <= 0.5:
            raise ValueError("amplitude must lie in (0, 0.5]")
        if self.frequency < 1:
            raise ValueError("frequency must be a positive integer")

    def eval(self, X: np.ndarray) -> np.ndarray:
        x = _clamp01(X[:, 0])
        return 0.5 + self.amplitude * np.sin(2.0 * math.pi * self.frequency * x)

    def to_dict(self) -> dict:
        return {"variant": self.tag, "amplitude": self.amplitude,
                "frequency": self.frequency}


def bump_profile(r: np.ndarray, height_scale: float, radius: float, alpha: float) -> np.ndarray:
    """Radial bump: flat at height_scale * radius^alpha / 2 inside radius/2,
    zero outside radius, glued by matched power branches in between."""
    delta = radius**alpha
    inner = 0.5 * height_scale * delta
    mid = np.where(
        r > 0.75 * radius,
        height_scale * 4.0 ** (alpha - 1.0) * np.maximum(radius - r, 0.0) ** alpha,
        height_scale * (0.5 * delta - 4.0 ** (alpha - 1.0) * np.maximum(r - 0.5 * radius, 0.0) ** alpha),
    )
    return np.where(r <= 0.5 * radius, inner, np.where(r >= radius, 0.0, mid))


@dataclass(frozen=True)
class LowerBoundStrongEta:
    """Linear crossing in the last coordinate plus signed radial bumps.

    The first d-1 coordinates are tiled by hypercubes of side 2 * radius;
    each carries a bump of sign sigma_k riding on f(x_d) = x_d / 2 + 1/4.
    """

    tag = "lower-bound-strong"
    alpha: float
    radius: float  # bump radius = Delta^(1/alpha), a power of 1/2
    height: float  # the constant C in (0, 1]
    sigma: tuple[int, ...]
    dim: int

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError("lower-bound-strong requires dim >= 2")
        if not 0 < self.height <= 1:
            raise ValueError("height must lie in (0, 1]")
        m = self.cells_per_axis
        if abs(m * 2 * self.radius - 1.0) > 1e-12 or m < 1:
            raise ValueError("2 * radius must divide 1 evenly")
        if len(self.sigma) != m ** (self.dim - 1):
            raise ValueError("sigma length must match the tile count")
        if any(s not in (-1, 1) for s in self.sigma):
            raise ValueError("sigma entries must be +/-1")

    @property
    def cells_per_axis(self) -> int:
        return int(round(1.0 / (2.0 * self.radius)))

    @property
    def delta(self) -> float:
        return self.radius**self.alpha

    def eval(self, X: np.ndarray) -> np.ndarray:
        Xc = _clamp01(X)
        base = 0.5 * Xc[:, -1] + 0.25
        xt = Xc[:, :-1]
        m = self.cells_per_axis
        idx = np.clip((xt // (2.0 * self.radius)).astype(np.int64), 0, m - 1)
        centers = (idx + 0.5) * 2.0 * self.radius
        r = np.linalg.norm(xt - centers, axis=1)
        key = np.zeros(X.shape[0], dtype=np.int64)
        for i in range(self.dim - 1):
            key = key * m + idx[:, i]
        signs = np.asarray(self.sigma, dtype=float)[key]
        return base + signs * bump_profile(r, self.height, self.radius, self.alpha)

    def to_dict(self) -> dict:
        return {"variant": self.tag, "alpha": self.alpha, "radius": self.radius,
                "height": self.height, "sigma": list(self.sigma), "dim": self.dim}


@dataclass(frozen=True)
class LowerBoundWeakEta:
    """Signed bumps around 1/2 on [0, 1/2]^d plus a corner spike at (1,...,1).

    Off the bump region eta is exactly 1/2, so only queries that land near a
    bump are informative. The corner carries eta = 1 at the atom itself with
    a smooth ramp around it, so the atom's cell is eventually decidable.
    """

    tag = "lower-bound-weak"
    alpha: float
    radius: float
    height: float
    sigma: tuple[int, ...]
    dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if not 0 < self.height <= 1:
            raise ValueError("height must lie in (0, 1]")
        m = self.cells_per_axis
        if abs(m * 2 * self.radius - 0.5) > 1e-12 or m < 1:
            raise ValueError("2 * radius must divide 1/2 evenly")
        if len(self.sigma) != m**self.dim:
            raise ValueError("sigma length must match the tile count")
        if any(s not in (-1, 1) for s in self.sigma):
            raise ValueError("sigma entries must be +/-1")

    @property
    def cells_per_axis(self) -> int:
        return int(round(0.5 / (2.0 * self.radius)))

    @property
    def delta(self) -> float:
        return self.radius**self.alpha

    @property
    def corner_margin(self) -> float:
        # corner ramp peaks at this height above 1/2 (the atom itself is 1)
        return 0.5 * self.height * 0.5**self.alpha

    def eval(self, X: np.ndarray) -> np.ndarray:
        Xc = _clamp01(X)
        out = np.full(X.shape[0], 0.5)
        m = self.cells_per_axis
        in_box = np.all(Xc <= 0.5, axis=1)
        if np.any(in_box):
            xb = Xc[in_box]
            idx = np.clip((xb // (2.0 * self.radius)).astype(np.int64), 0, m - 1)
            centers = (idx + 0.5) * 2.0 * self.radius
            r = np.linalg.norm(xb - centers, axis=1)
            key = np.zeros(xb.shape[0], dtype=np.int64)
            for i in range(self.dim):
                key = key * m + idx[:, i]
            signs = np.asarray(self.sigma, dtype=float)[key]
            out[in_box] += signs * bump_profile(r, self.height, self.radius, self.alpha)
        rc = np.linalg.norm(Xc - 1.0, axis=1)
        out += bump_profile(rc, self.height, 0.5, self.alpha)
        atom = np.all(X == 1.0, axis=1)
        out[atom] = 1.0
        return out

    def to_dict(self) -> dict:
        return {"variant": self.tag, "alpha": self.alpha, "radius": self.radius,
                "height": self.height, "sigma": list(self.sigma), "dim": self.dim}


_ETA_VARIANTS = {
    "constant": lambda d: ConstantEta(value=d["value"]),
    "affine": lambda d: AffineEta(slope=d["slope"]),
    "sinusoidal-bump": lambda d: SinusoidalBumpEta(amplitude=d["amplitude"],
                                                   frequency=d["frequency"]),
    "lower-bound-strong": lambda d: LowerBoundStrongEta(
        alpha=d["alpha"], radius=d["radius"], height=d["height"],
        sigma=tuple(d["sigma"]), dim=d["dim"]),
    "lower-bound-weak": lambda d: LowerBoundWeakEta(
        alpha=d["alpha"], radius=d["radius"], height=d["height"],
        sigma=tuple(d["sigma"]), dim=d["dim"]),
}


# ---------------------------------------------------------------------------
# marginals
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class UniformMarginal:
    tag = "uniform"
    dim: int

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.random((n, self.dim))

    def to_dict(self) -> dict:
        return {"kind": self.tag, "dim": self.dim}


@dataclass(frozen=True)
class BallsAtomMarginal:
    """Uniform mass w spread over balls inscribed in the bump tiles of
    [0, 1/2]^d, plus a point atom of mass 1 - w at (1, ..., 1)."""

    tag = "balls-atom"
    dim: int
    radius: float          # tile radius; balls have radius radius/2
    cells_per_axis: int
    w: float

    def __post_init__(self):
        if not 0 < self.w < 1:
            raise ValueError("w must lie in (0, 1)")

    @property
    def ball_radius(self) -> float:
        return 0.5 * self.radius

    def ball_centers(self) -> np.ndarray:
        m = self.cells_per_axis
        axes = [np.arange(m)] * self.dim
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.dim)
        return (mesh + 0.5) * 2.0 * self.radius

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        out = np.ones((n, self.dim))
        in_balls = rng.random(n) < self.w
        k = int(np.sum(in_balls))
        if k:
            centers = self.ball_centers()
            which = rng.integers(0, len(centers), size=k)
            pts = np.empty((k, self.dim))
            todo = np.arange(k)
            while todo.size:
                u = (rng.random((todo.size, self.dim)) * 2.0 - 1.0) * self.ball_radius
                ok = np.linalg.norm(u, axis=1) <= self.ball_radius
                pts[todo[ok]] = u[ok]
                todo = todo[~ok]
            out[in_balls] = centers[which] + pts
        return out

    def to_dict(self) -> dict:
        return {"kind": self.tag, "dim": self.dim, "radius": self.radius,
                "cells_per_axis": self.cells_per_axis, "w": self.w}


_MARGINALS = {
    "uniform": lambda d: UniformMarginal(dim=d["dim"]),
    "balls-atom": lambda d: BallsAtomMarginal(dim=d["dim"], radius=d["radius"],
                                              cells_per_axis=d["cells_per_axis"], w=d["w"]),
}


# ---------------------------------------------------------------------------
# problem + oracle + classifier
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Problem:
    eta: object
    marginal: object
    params: NoiseParams
    dim: int

    def eta_at(self, X) -> np.ndarray:
        """Vectorised eta; accepts (n, d) arrays or single points."""
        X = np.asarray(X, dtype=float)
        single = X.ndim == 1
        if single:
            X = X[None, :]
        if X.shape[1] != self.dim:
            raise ValueError(f"points must have dimension {self.dim}")
        vals = self.eta.eval(X)
        return float(vals[0]) if single else vals

    def bayes_label(self, X) -> np.ndarray:
        vals = self.eta_at(X)
        if np.isscalar(vals):
            return int(vals >= 0.5)
        return (vals >= 0.5).astype(np.int8)

    def to_dict(self) -> dict:
        return {"dim": self.dim, "eta": self.eta.to_dict(),
                "marginal": self.marginal.to_dict(), "params": self.params.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "Problem":
        eta = _ETA_VARIANTS[d["eta"]["variant"]](d["eta"])
        marginal = _MARGINALS[d["marginal"]["kind"]](d["marginal"])
        return cls(eta=eta, marginal=marginal,
                   params=NoiseParams.from_dict(d["params"]), dim=d["dim"])


def eta_at(problem: Problem, x) -> float:
    return problem.eta_at(np.asarray(x, dtype=float))


def bayes_label(problem: Problem, x) -> int:
    return int(problem.bayes_label(np.asarray(x, dtype=float)))


class LabelOracle:
    """Budget-metered Bernoulli(eta(x)) label source.

    Draws are counter-based: the label for the oracle's k-th query depends
    only on (rng_root, k, x), so any batching or replay that assigns the
    same counters yields identical labels.
    """

    def __init__(self, problem: Problem, budget: int, rng_root: int):
        if budget < 0:
            raise ValueError("budget must be nonnegative")
        self.problem = problem
        self.initial_budget = int(budget)
        self.spent = 0
        self.rng_root = int(rng_root)

    @property
    def budget(self) -> int:
        return self.initial_budget - self.spent

    def _uniforms(self, start: int, count: int) -> np.ndarray:
        # Philox.advance moves one 4-double block per unit; align to the
        # absolute draw position so any batching sees the same stream
        bg = np.random.Philox(key=self.rng_root)
        bg.advance(start // 4)
        gen = np.random.Generator(bg)
        offset = start % 4
        if offset:
            gen.random(offset)
        return gen.random(count)

    def _reserve(self, count: int) -> int:
        if count > self.budget:
            raise BudgetExhausted(
                f"requested {count} labels with only {self.budget} remaining")
        start = self.spent
        self.spent += count
        return start

    def query_label(self, x) -> int:
        return int(self.query_labels(np.atleast_2d(np.asarray(x, dtype=float)))[0])

    def query_labels(self, X: np.ndarray) -> np.ndarray:
        """One label per row of X."""
        X = np.asarray(X, dtype=float)
        etas = self.problem.eta_at(X)
        start = self._reserve(X.shape[0])
        u = self._uniforms(start, X.shape[0])
        return (u < etas).astype(np.int8)

    def query_counts(self, X: np.ndarray, repeats: int) -> np.ndarray:
        """Sum of `repeats` labels at each row of X (one budget unit each)."""
        X = np.asarray(X, dtype=float)
        n = X.shape[0]
        total = n * repeats
        etas = self.problem.eta_at(X)
        start = self._reserve(total)
        counts = np.zeros(n, dtype=np.int64)
        block = max(1, int(2**24 // max(repeats, 1)))
        for lo in range(0, n, block):
            hi = min(n, lo + block)
            m = (hi - lo) * repeats
            u = self._uniforms(start + lo * repeats, m).reshape(hi - lo, repeats)
            counts[lo:hi] = np.sum(u < etas[lo:hi, None], axis=1)
        return counts


class OracleView:
    """A capped window onto a shared oracle; spends count against both."""

    def __init__(self, base: LabelOracle, cap: int):
        self.base = base
        self.problem = base.problem
        self.rng_root = base.rng_root
        self.cap = int(cap)
        self.spent = 0

    @property
    def budget(self) -> int:
        return min(self.cap - self.spent, self.base.budget)

    def query_label(self, x) -> int:
        return int(self.query_labels(np.atleast_2d(np.asarray(x, dtype=float)))[0])

    def query_labels(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.shape[0] > self.budget:
            raise BudgetExhausted("phase budget exhausted")
        out = self.base.query_labels(X)
        self.spent += X.shape[0]
        return out

    def query_counts(self, X: np.ndarray, repeats: int) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.shape[0] * repeats > self.budget:
            raise BudgetExhausted("phase budget exhausted")
        out = self.base.query_counts(X, repeats)
        self.spent += X.shape[0] * repeats
        return out


@dataclass(frozen=True)
class Classifier:
    """Piecewise-constant rule: 1 on the positive region, 0 elsewhere."""

    positive_region: Region

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        single = X.ndim == 1
        mask = self.positive_region.contains_points(np.atleast_2d(X))
        out = mask.astype(np.int8)
        return int(out[0]) if single else out


@dataclass(frozen=True)
class RiskEstimate:
    value: float
    half_width: float
    method: str


def _interval_overlap(lo: float, hi: float, intervals) -> float:
    return sum(max(0.0, min(hi, b) - max(lo, a)) for a, b in intervals)


def _exact_risk(problem: Problem, clf: Classifier) -> float:
    eta = problem.eta
    marg = problem.marginal
    if isinstance(eta, ConstantEta) and isinstance(marg, UniformMarginal):
        pos_vol = clf.positive_region.volume
        gap = abs(1.0 - 2.0 * eta.value)
        wrong_vol = (1.0 - pos_vol) if eta.value >= 0.5 else pos_vol
        return gap * wrong_vol
    if problem.dim == 1 and isinstance(marg, UniformMarginal) and \
            isinstance(eta, (AffineEta, SinusoidalBumpEta)):
        return _exact_risk_1d_uniform(problem, clf)
    if problem.dim == 1 and isinstance(eta, LowerBoundWeakEta) and \
            isinstance(marg, BallsAtomMarginal):
        return _exact_risk_lb_weak_1d(problem, clf)
    raise UnsupportedExact(
        f"no closed form for eta={type(eta).__name__} / marginal={type(marg).__name__}")


def _exact_risk_1d_uniform(problem: Problem, clf: Classifier) -> float:
    eta = problem.eta
    pos = clf.positive_region.intervals()
    if isinstance(eta, AffineEta):
        crossings = [0.5]
    else:
        f = eta.frequency
        crossings = [k / (2.0 * f) for k in range(2 * f + 1)]
    cuts = sorted({0.0, 1.0, *crossings, *(e for iv in pos for e in iv)})
    cuts = [c for c in cuts if 0.0 <= c <= 1.0]
    total = 0.0
    nodes, weights = np.polynomial.legendre.leggauss(40)
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        if hi - lo < 1e-15:
            continue
        mid = 0.5 * (lo + hi)
        f_label = 1 if problem.eta_at(np.array([mid])) >= 0.5 else 0
        c_label = 1 if _interval_overlap(lo, hi, pos) > 0.5 * (hi - lo) else 0
        if f_label == c_label:
            continue
        if isinstance(eta, AffineEta):
            s = abs(eta.slope)
            total += s * abs((hi - 0.5) ** 2 - (lo - 0.5) ** 2) \
                if (lo >= 0.5 or hi <= 0.5) else s * ((hi - 0.5) ** 2 + (lo - 0.5) ** 2)
        else:
            x = mid + 0.5 * (hi - lo) * nodes
            vals = np.abs(1.0 - 2.0 * problem.eta_at(x[:, None]))
            total += 0.5 * (hi - lo) * float(weights @ vals)
    return total


def _exact_risk_lb_weak_1d(problem: Problem, clf: Classifier) -> float:
    eta = problem.eta
    marg = problem.marginal
    pos = clf.positive_region.intervals()
    centers = marg.ball_centers()[:, 0]
    rho = marg.ball_radius
    per_ball_mass = marg.w / len(centers)
    total = 0.0
    for k, c in enumerate(centers):
        lo, hi = c - rho, c + rho
        sign = eta.sigma[k]
        pos_len = _interval_overlap(lo, hi, pos)
        wrong_len = (hi - lo) - pos_len if sign > 0 else pos_len
        gap = eta.height * eta.delta  # |1 - 2 eta| on the inner ball
        total += per_ball_mass * (wrong_len / (hi - lo)) * gap
    atom_label = clf.predict(np.ones(problem.dim))
    if atom_label != 1:
        total += (1.0 - marg.w) * 1.0
    return total


def excess_risk(problem: Problem, clf: Classifier, method: str = "exact",
                n_samples: int = 100_000, seed: int = 0) -> RiskEstimate:
    """Risk above the Bayes classifier: E[|1 - 2 eta(X)|; disagreement].

    Exact mode requires a closed form for the (eta, marginal) pair and
    raises UnsupportedExact otherwise; monte_carlo reports a 95% normal
    half-width with the variance clipped away from zero.
    """
    if method == "exact":
        return RiskEstimate(_exact_risk(problem, clf), 0.0, "exact")
    if method != "monte_carlo":
        raise ValueError("method must be 'exact' or 'monte_carlo'")
    if n_samples < 1:
        raise ValueError("monte_carlo requires n_samples >= 1")
    rng = np.random.default_rng(seed)
    X = problem.marginal.sample(rng, n_samples)
    etas = problem.eta_at(X)
    disagree = clf.predict(X) != (etas >= 0.5)
    vals = np.abs(1.0 - 2.0 * etas) * disagree
    mean = float(np.mean(vals))
    var = max(float(np.var(vals)), 1e-12)
    half = 1.96 * math.sqrt(var / n_samples)
    return RiskEstimate(mean, half, "monte_carlo")
