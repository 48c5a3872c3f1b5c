import numpy as np
import pytest

from mqlab.generators import (InfeasibleDelta, InvalidFamilyParams, make_lb_strong,
                              make_lb_weak, make_smooth_problem, verify_holder,
                              verify_margin)
from mqlab.problems import bump_profile


def test_tile_counts():
    strong = make_lb_strong(dim=2, alpha=1.0, delta=1 / 8, seed=0)
    assert len(strong.eta.sigma) == 4  # 2^(1-d) * delta^((1-d)/alpha) = 4
    weak = make_lb_weak(dim=1, alpha=1.0, delta=1 / 16, seed=0)
    assert len(weak.eta.sigma) == 4  # 4^-d * delta^(-d/alpha) = 4


def test_delta_snapping():
    prob = make_lb_strong(dim=2, alpha=1.0, delta=0.1, seed=0)
    assert prob.eta.radius == pytest.approx(0.125)  # snapped to 2^-3
    prob2 = make_lb_strong(dim=2, alpha=2.0, delta=1 / 16, seed=0)
    assert prob2.eta.radius == pytest.approx(0.25)  # radius = delta^(1/alpha)
    with pytest.raises(InfeasibleDelta):
        make_lb_strong(dim=2, alpha=1.0, delta=1e-15, seed=0)


def test_bump_profile_branch_continuity():
    # both branch expressions meet at 3/4 of the radius with value h*delta/4
    for alpha in (1.0, 2.0, 1.5):
        radius, h = 0.25, 0.8
        seam = 0.75 * radius
        left = h * (0.5 * radius**alpha - 4 ** (alpha - 1) * (seam - radius / 2) ** alpha)
        right = h * 4 ** (alpha - 1) * (radius - seam) ** alpha
        assert left == pytest.approx(right)
        assert left == pytest.approx(h * radius**alpha / 4)
        vals = bump_profile(np.array([seam]), h, radius, alpha)
        assert vals[0] == pytest.approx(h * radius**alpha / 4)


def test_bump_vanishes_at_tile_border():
    # at distance exactly radius the bump is zero: tiles glue continuously
    prob = make_lb_strong(dim=2, alpha=1.0, delta=1 / 16, sigma=(1,) * 8, height=0.5)
    radius = prob.eta.radius
    center0 = radius  # first tile center in the transverse coordinate
    x = np.array([[center0 + radius, 0.4]])
    base = 0.5 * 0.4 + 0.25
    assert prob.eta_at(x)[0] == pytest.approx(base)


def test_lb_strong_requires_dim_2():
    with pytest.raises(ValueError):
        make_lb_strong(dim=1, alpha=1.0, delta=1 / 8)


def test_lb_strong_range():
    prob = make_lb_strong(dim=2, alpha=1.0, delta=1 / 16, seed=3)
    X = np.random.default_rng(0).random((100_000, 2))
    vals = prob.eta_at(X)
    assert vals.min() >= 0.2 - 1e-12
    assert vals.max() <= 0.8 + 1e-12


def test_sigma_flip_locality():
    base = make_lb_strong(dim=2, alpha=1.0, delta=1 / 16, sigma=(1,) * 8, height=0.5)
    flipped_sigma = (-1,) + (1,) * 7
    flipped = make_lb_strong(dim=2, alpha=1.0, delta=1 / 16, sigma=flipped_sigma,
                             height=0.5)
    X = np.random.default_rng(1).random((50_000, 2))
    diff = base.eta_at(X) != flipped.eta_at(X)
    radius = base.eta.radius
    inside_first_tile = X[:, 0] < 2 * radius
    assert np.all(~diff | inside_first_tile)
    assert np.any(diff)


def test_lb_weak_sampling_and_atom_mass():
    prob = make_lb_weak(dim=1, alpha=1.0, delta=1 / 8, sigma=(1, 1))
    w = prob.marginal.w
    rng = np.random.default_rng(0)
    X = prob.marginal.sample(rng, 200_000)
    at_atom = np.all(X == 1.0, axis=1)
    freq = at_atom.mean()
    assert abs(freq - (1 - w)) < 3 * np.sqrt(w * (1 - w) / 200_000)
    # everything else lies on some ball
    balls = prob.marginal.ball_centers()
    offballs = X[~at_atom]
    dists = np.min(np.abs(offballs[:, 0:1] - balls[:, 0][None, :]), axis=1)
    assert np.all(dists <= prob.marginal.ball_radius + 1e-12)


def test_lb_weak_margin_law():
    prob = make_lb_weak(dim=1, alpha=1.0, delta=1 / 8, sigma=(1, 1))
    hard = 0.5 * prob.eta.height * prob.eta.delta
    rng = np.random.default_rng(2)
    X = prob.marginal.sample(rng, 100_000)
    margins = np.abs(prob.eta_at(X) - 0.5)
    below = margins < hard - 1e-9
    assert not np.any(below)  # no mass strictly inside the ball margin
    mid = (margins <= 0.4) & (margins >= hard - 1e-9)
    assert abs(mid.mean() - prob.marginal.w) < 0.01


def test_smooth_family_declarations():
    affine = make_smooth_problem("affine", slope=0.4)
    assert affine.params.beta == 1.0 and affine.params.c3 == pytest.approx(5.0)
    const = make_smooth_problem("constant", c=0.75)
    assert const.params.delta0 == pytest.approx(0.25)
    with pytest.raises(InvalidFamilyParams):
        make_smooth_problem("affine", dim=2)
    with pytest.raises(InvalidFamilyParams):
        make_smooth_problem("nope")
    with pytest.raises(InvalidFamilyParams):
        make_smooth_problem("affine", slope=1.5)


def test_verify_holder_examples():
    const = make_smooth_problem("constant", c=0.75)
    rep = verify_holder(const, 1.0, 1.0, n_points=2000, seed=0)
    assert rep.passed and rep.max_ratio == pytest.approx(0.0)
    affine = make_smooth_problem("affine", slope=0.4)
    rep = verify_holder(affine, 1.0, 1.0, n_points=2000, seed=0)
    assert rep.passed
    assert rep.max_ratio == pytest.approx(0.4, rel=1e-3)
    # slope above the declared constant must fail
    steep = make_smooth_problem("affine", slope=1.0)
    assert not verify_holder(steep, 1.0, 0.5 + 1e-9, n_points=2000, seed=0).passed
    # quadratic check path: finite differences on a smooth instance
    strong2 = make_lb_strong(dim=2, alpha=2.0, delta=1 / 16, seed=5)
    assert verify_holder(strong2, 2.0, strong2.params.lam, n_points=2500, seed=7).passed


def test_verify_margin_examples():
    const = make_smooth_problem("constant", c=0.75)
    rep = verify_margin(const, const.params.beta, const.params.delta0,
                        const.params.c3, n_samples=50_000, seed=0)
    assert rep.passed and rep.inner_band_mass == 0.0
    affine = make_smooth_problem("affine", slope=0.4)
    rep = verify_margin(affine, 1.0, 0.0, 5.0, n_samples=1_000_000, seed=0)
    assert rep.passed
    # understated mass constant fails
    rep_bad = verify_margin(affine, 1.0, 0.0, 1.0, n_samples=100_000, seed=0)
    assert not rep_bad.passed
    with pytest.raises(ValueError):
        verify_margin(affine, 1.0, 0.0, 5.0, n_samples=100)


def test_every_generated_problem_self_consistent():
    problems = [
        make_smooth_problem("constant", c=0.75),
        make_smooth_problem("affine", slope=0.4),
        make_smooth_problem("sinusoidal-bump", amplitude=0.3, frequency=2),
        make_lb_strong(dim=2, alpha=1.0, delta=1 / 16, seed=2),
        make_lb_strong(dim=2, alpha=2.0, delta=1 / 16, seed=2),
        make_lb_weak(dim=1, alpha=1.0, delta=1 / 8, seed=2),
    ]
    for prob in problems:
        p = prob.params
        hol = verify_holder(prob, p.alpha, p.lam, n_points=3000, seed=17)
        mar = verify_margin(prob, p.beta, p.delta0, p.c3, n_samples=60_000, seed=17)
        assert hol.passed, (prob.eta.tag, hol.max_ratio)
        assert mar.passed, prob.eta.tag
