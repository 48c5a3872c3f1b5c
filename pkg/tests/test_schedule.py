import math

import numpy as np
import pytest

from mqlab.schedule import (DepthSchedule, ScheduleOverflow, bias_bound,
                            compute_delta_threshold, depth_confidence,
                            labeling_threshold, samples_per_cell,
                            samples_per_cell_real)


def test_samples_low_smoothness_example():
    # b = 0.25, delta_l = 0.05 * 2^-4, t = ceil(log(320) / (2 * 0.0625)) = 47
    assert samples_per_cell(2, 1.0, 1.0, 1, 0.05) == 47


def test_samples_high_smoothness_example():
    # 4^3 * 3^2 * log(320) / 0.0625, evaluated with the exact logarithm
    t = samples_per_cell(1, 2.0, 1.0, 1, 0.05)
    expected = math.ceil(64 * 9 * math.log(320.0) / 0.0625)
    assert t == expected == 53161


def test_samples_monotone_in_delta():
    ts = [samples_per_cell(3, 0.7, 1.5, 2, d) for d in (0.01, 0.05, 0.2, 0.5)]
    assert ts == sorted(ts, reverse=True)


def test_samples_validation_and_overflow():
    with pytest.raises(ValueError):
        samples_per_cell(0, 1.0, 1.0, 1, 0.05)
    with pytest.raises(ValueError):
        samples_per_cell(1, 1.0, 0.5, 1, 0.05)
    with pytest.raises(ScheduleOverflow):
        samples_per_cell(40, 2.5, 1.0, 2, 0.05)


def test_threshold_identity_lattice():
    # un-ceiled threshold equals 4 * bias bound whenever alpha <= 1
    rng = np.random.default_rng(0)
    checked = 0
    while checked < 200:
        alpha = float(rng.uniform(0.05, 1.0))
        lam = float(rng.uniform(1.0, 5.0))
        dim = int(rng.integers(1, 4))
        depth = int(rng.integers(1, 12))
        delta = float(rng.uniform(0.001, 0.5))
        b = bias_bound(depth, alpha, lam, dim)
        thr = labeling_threshold(depth, alpha, lam, dim, delta, ceil_t=False)
        assert abs(thr - 4.0 * b) <= 1e-12 * 4.0 * b
        checked += 1


def test_threshold_example_and_monotonicity():
    assert labeling_threshold(2, 1.0, 1.0, 1, 0.05, ceil_t=False) == pytest.approx(1.0)
    vals = [labeling_threshold(l, 1.0, 1.0, 1, 0.05) for l in range(1, 10)]
    assert vals == sorted(vals, reverse=True)
    # ceiling only shrinks the deviation term
    for l in range(1, 8):
        assert labeling_threshold(l, 0.6, 2.0, 2, 0.1) <= \
            labeling_threshold(l, 0.6, 2.0, 2, 0.1, ceil_t=False) + 1e-15


def test_schedule_positive_finite():
    for alpha in (0.3, 1.0, 1.7, 2.5):
        for depth in (1, 3, 6):
            t = samples_per_cell_real(depth, alpha, 1.5, 2, 0.05)
            assert 0 < t < float("inf")
            assert depth_confidence(depth, alpha, 2, 0.05) > 0
            assert bias_bound(depth, alpha, 1.5, 2) > 0


def test_samples_agree_at_capped_alpha():
    for alpha in (0.2, 0.5, 1.0):
        a = samples_per_cell(4, alpha, 2.0, 1, 0.1)
        b = samples_per_cell(4, min(alpha, 1.0), 2.0, 1, 0.1)
        assert a == b


def test_log_scale_is_confidence_rescaling():
    # scaling the log term by k matches running at confidence delta_l^k
    t_scaled = samples_per_cell_real(3, 1.0, 1.0, 1, 0.05, log_scale=0.25)
    dl = depth_confidence(3, 1.0, 1, 0.05)
    t_equiv = 0.25 * math.log(1 / dl) / (2 * bias_bound(3, 1.0, 1.0, 1) ** 2)
    assert t_scaled == pytest.approx(t_equiv)
    thr = labeling_threshold(3, 1.0, 1.0, 1, 0.05, log_scale=0.25, ceil_t=False)
    assert thr == pytest.approx(4.0 * bias_bound(3, 1.0, 1.0, 1))


def test_depth_schedule_bundle():
    sched = DepthSchedule.at(2, 1.0, 1.0, 1, 0.05)
    assert sched.t == 47
    assert sched.b == pytest.approx(0.25)
    assert sched.delta_l == pytest.approx(0.05 * 2.0**-4)
    assert sched.threshold <= 1.0 + 1e-12


def test_delta_threshold_limits():
    v1 = compute_delta_threshold(10**4, 0.05, 1.0, 1.0, 1, 0.0)
    v2 = compute_delta_threshold(10**8, 0.05, 1.0, 1.0, 1, 0.0)
    v3 = compute_delta_threshold(10**12, 0.05, 1.0, 1.0, 1, 0.0)
    assert v1 > v2 > v3 > 0


def test_delta_threshold_exponents():
    # exponent of n is alpha / (2 alpha + [d - alpha beta]_+); divide the log
    # factor out, then read the slope between two budgets
    base = dict(delta=0.05, alpha=1.0, lam=1.0, dim=1, density="strong")
    lo = compute_delta_threshold(n=10**6, beta=0.0, **base)
    hi = compute_delta_threshold(n=10**12, beta=0.0, **base)
    la = math.log(2 * 10**6 / 0.05)
    lb = math.log(2 * 10**12 / 0.05)
    slope = math.log((hi / lb ** (1 / 3)) / (lo / la ** (1 / 3))) / math.log(10**6)
    assert slope == pytest.approx(-1.0 / 3.0, abs=1e-9)

    # alpha * beta >= d collapses the bracket: exponent 1/2
    lo = compute_delta_threshold(n=10**6, beta=2.0, **base)
    hi = compute_delta_threshold(n=10**12, beta=2.0, **base)
    slope = math.log((hi / lb ** 0.5) / (lo / la ** 0.5)) / math.log(10**6)
    assert slope == pytest.approx(-0.5, abs=1e-9)


def test_delta_threshold_branches():
    # both densities, both smoothness branches evaluate positive and finite
    for density in ("strong", "unrestricted"):
        for alpha in (0.5, 2.0):
            v = compute_delta_threshold(10**6, 0.05, alpha, 2.0, 2, 1.0, density)
            assert 0 < v < float("inf")
    with pytest.raises(ValueError):
        compute_delta_threshold(10**6, 0.05, 1.0, 1.0, 1, 1.0, "other")
