import numpy as np
import pytest

from mqlab.generators import make_lb_weak, make_smooth_problem
from mqlab.grid import Cell, Region
from mqlab.problems import LabelOracle
from mqlab.subroutine import (SubroutineConfig, _kernel_pass, classifier_from,
                              run_subroutine)

KAPPA = 1 / 16


def test_config_validation():
    with pytest.raises(ValueError):
        SubroutineConfig(n=0, delta=0.05, alpha=1.0)
    with pytest.raises(ValueError):
        SubroutineConfig(n=100, delta=1.5, alpha=1.0)
    with pytest.raises(ValueError):
        SubroutineConfig(n=100, delta=0.05, alpha=-1.0)
    with pytest.raises(ValueError):
        SubroutineConfig(n=100, delta=0.05, alpha=1.0, lam=0.2)


def test_infeasible_budget_contract():
    prob = make_smooth_problem("affine", slope=0.4)
    oracle = LabelOracle(prob, budget=3, rng_root=0)
    res = run_subroutine(oracle, SubroutineConfig(n=3, delta=0.05, alpha=1.0))
    assert res.infeasible
    assert len(res.s0) == 0 and len(res.s1) == 0
    assert res.spent == 0 and oracle.spent == 0
    # the whole cube is reported unresolved
    assert res.unresolved == [Cell(0, (0,))]


def test_constant_problem_gets_fully_labeled():
    # margin 0.25 everywhere: labeling kicks in once the threshold 4 * 2^-l
    # drops below it; at this budget every seeded run covers the cube
    prob = make_smooth_problem("constant", c=0.75)
    full = 0
    for seed in range(20):
        oracle = LabelOracle(prob, budget=20_000, rng_root=seed)
        res = run_subroutine(oracle, SubroutineConfig(
            n=20_000, delta=0.05, alpha=1.0, lam=1.0, confidence_log_scale=KAPPA))
        assert len(res.s0) == 0
        full += res.s1.volume == pytest.approx(1.0)
    assert full >= 19


def test_affine_label_sets_have_correct_signs():
    prob = make_smooth_problem("affine", slope=0.4)
    good = 0
    for seed in range(20):
        oracle = LabelOracle(prob, budget=10**5, rng_root=seed)
        res = run_subroutine(oracle, SubroutineConfig(
            n=10**5, delta=0.05, alpha=1.0, lam=1.0, confidence_log_scale=KAPPA))
        assert len(res.s1) > 0 and len(res.s0) > 0
        s1_ok = all(c.lower()[0] >= 0.5 for c in res.s1.cells())
        s0_ok = all(c.upper()[0] <= 0.5 for c in res.s0.cells())
        good += s1_ok and s0_ok
    assert good >= 19


def test_budget_safety_and_disjointness_randomised():
    rng = np.random.default_rng(2024)
    problems = {
        1: [make_smooth_problem("affine", slope=0.4),
            make_smooth_problem("constant", c=0.7),
            make_lb_weak(dim=1, alpha=1.0, delta=1 / 8, sigma=(1, -1))],
        2: [make_smooth_problem("constant", dim=2, c=0.65)],
    }
    for _ in range(60):
        dim = int(rng.choice([1, 1, 1, 2]))
        prob = problems[dim][rng.integers(len(problems[dim]))]
        n = int(rng.integers(10, 30_000))
        cfg = SubroutineConfig(
            n=n, delta=float(rng.uniform(0.01, 0.4)),
            alpha=float(rng.uniform(0.2, 2.5)), lam=float(rng.uniform(1.0, 2.0)),
            confidence_log_scale=float(rng.choice([1.0, 0.25, KAPPA])))
        oracle = LabelOracle(prob, budget=n, rng_root=int(rng.integers(10**6)))
        res = run_subroutine(oracle, cfg)
        assert oracle.spent <= n
        assert res.spent == oracle.spent
        # label sets never overlap
        for c in res.s1.cells():
            assert not res.s0.overlaps(c)


def test_coverage_partition():
    prob = make_smooth_problem("affine", slope=0.4)
    for alpha in (1.0, 2.0):
        oracle = LabelOracle(prob, budget=50_000, rng_root=9)
        res = run_subroutine(oracle, SubroutineConfig(
            n=50_000, delta=0.05, alpha=alpha, lam=1.0, confidence_log_scale=KAPPA))
        total = Region(1)
        for cell in res.s0.cells():
            total.add(cell)
        for cell in res.s1.cells():
            total.add(cell)
        for cell in res.unresolved:
            total.add(cell)  # raises OverlapError if not disjoint
        assert total.volume == pytest.approx(1.0)


def test_monotone_refinement_trace():
    prob = make_smooth_problem("affine", slope=0.4)
    oracle = LabelOracle(prob, budget=10**5, rng_root=4)
    res = run_subroutine(oracle, SubroutineConfig(
        n=10**5, delta=0.05, alpha=1.0, lam=1.0, confidence_log_scale=KAPPA),
        trace=True)
    levels = sorted(res.trace)
    assert levels == list(range(1, res.depth + 1))
    assert res.active_counts == [len(res.trace[l]["coords"]) for l in levels]
    for l in levels[:-1]:
        split = res.trace[l]["coords"][res.trace[l]["split"]]
        parents = {tuple(r) for r in split}
        for row in res.trace[l + 1]["coords"]:
            assert tuple(v // 2 for v in row) in parents


def test_determinism():
    prob = make_smooth_problem("affine", slope=0.4)
    results = []
    for _ in range(2):
        oracle = LabelOracle(prob, budget=30_000, rng_root=77)
        res = run_subroutine(oracle, SubroutineConfig(
            n=30_000, delta=0.05, alpha=1.0, confidence_log_scale=KAPPA))
        results.append((res.s0.to_list(), res.s1.to_list(), res.spent, res.depth))
    assert results[0] == results[1]


def test_classifier_from_regions():
    empty = classifier_from(Region(1))
    assert empty.predict([0.3]) == 0
    full = classifier_from(Region(1, [Cell(0, (0,))]))
    assert full.predict([0.3]) == 1 and full.predict([1.0]) == 1


def test_kernel_pass_labels_clear_margin():
    # alpha=3 at exit depth 2: threshold 4^2 * 2^-6 = 0.25 well below the
    # margin 0.46, so every subcell of the ambiguous cells gets labeled 1
    prob = make_smooth_problem("constant", c=0.96)
    cfg = SubroutineConfig(n=10**7, delta=0.05, alpha=3.0, lam=1.0,
                           confidence_log_scale=KAPPA)
    oracle = LabelOracle(prob, budget=10**7, rng_root=5)
    s0, s1 = Region(1), Region(1)
    dead = _kernel_pass(oracle, cfg, 2, np.array([[1], [2]]), s0, s1)
    assert len(dead) == 0 and len(s0) == 0
    # subcell count per cell: 2^(floor(L alpha) - L) = 2^4
    assert len(s1) == 2 * 16
    assert all(c.depth == 6 for c in s1.cells())


def test_kernel_pass_dead_zone_at_half():
    prob = make_smooth_problem("constant", c=0.5)
    cfg = SubroutineConfig(n=10**7, delta=0.05, alpha=3.0, lam=1.0,
                           confidence_log_scale=KAPPA)
    oracle = LabelOracle(prob, budget=10**7, rng_root=5)
    s0, s1 = Region(1), Region(1)
    dead = _kernel_pass(oracle, cfg, 2, np.array([[1]]), s0, s1)
    assert len(s0) == 0 and len(s1) == 0
    assert len(dead) == 16


def test_kernel_pass_budget_is_reserved_by_guard():
    # a full alpha>1 run never raises BudgetExhausted: the guard reserve
    # always covers the kernel pass
    prob = make_smooth_problem("constant", c=0.75)
    for n in (100, 5_000, 200_000):
        oracle = LabelOracle(prob, budget=n, rng_root=8)
        res = run_subroutine(oracle, SubroutineConfig(
            n=n, delta=0.05, alpha=2.0, lam=1.0, confidence_log_scale=KAPPA))
        assert oracle.spent <= n


def test_depth_cap_flag():
    prob = make_smooth_problem("constant", c=0.5)  # never labels, splits forever
    oracle = LabelOracle(prob, budget=10**6, rng_root=1)
    res = run_subroutine(oracle, SubroutineConfig(
        n=10**6, delta=0.05, alpha=1.0, confidence_log_scale=KAPPA, depth_cap=3))
    assert res.depth_capped
    assert res.depth == 3
