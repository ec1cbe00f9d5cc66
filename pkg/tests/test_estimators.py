"""Headline estimators and mean-effect baselines."""

import numpy as np
import pytest
from scipy.special import expit

from cfdist.data import MultiSourceSample, ObservationalSample, RandomizedSample
from cfdist.density import EmptyArm
from cfdist.distance import MCIntegrationConfig
from cfdist.estimators import (
    ate_doubly_robust,
    ate_ipw,
    ate_plugin_regression,
    diff_in_means,
    diff_in_means_report,
    estimate_multi,
    estimate_observational,
    estimate_single,
    horvitz_thompson,
    per_site_estimates,
)
from cfdist.kernels import epanechnikov
from cfdist.nuisance import CrossFitPlan, DegenerateArm
from cfdist.simulate import gen_confounded

from oracles import smoothed_l1_normals

SPEC = epanechnikov(1)


def two_arm_normal(n, m1, m0, seed, s1=1.0, s0=1.0, pi1=0.5):
    gen = np.random.default_rng(seed)
    A = (gen.random(n) < pi1).astype(int)
    Y = np.where(A == 1, gen.normal(m1, s1, n), gen.normal(m0, s0, n))
    return RandomizedSample(A, Y, pi1=pi1)


def test_estimate_single_null_is_small():
    data = two_arm_normal(4000, 0.0, 0.0, 3)
    est = estimate_single(data, 0.3, 0.3, SPEC, MCIntegrationConfig(50_000, 1))
    assert est <= 0.15


def test_estimate_single_matches_smoothed_oracle():
    data = two_arm_normal(20_000, 2.0, 0.0, 5)
    est = estimate_single(data, 0.2, 0.2, SPEC, MCIntegrationConfig(100_000, 2))
    oracle = smoothed_l1_normals(2, 1, 0, 1, 0.2, 0.2, SPEC)
    assert abs(est - oracle) <= 0.05


def test_estimate_single_empty_arm():
    data = RandomizedSample(np.zeros(10, dtype=int), np.random.default_rng(0).normal(size=10))
    with pytest.raises(EmptyArm):
        estimate_single(data, 0.3, 0.3, SPEC, MCIntegrationConfig(2000, 0))


def test_estimate_multi_is_mean_of_site_estimates():
    sites = [two_arm_normal(300, 1.0, 0.0, s) for s in (1, 2, 3)]
    ms = MultiSourceSample(sites)
    cfg = MCIntegrationConfig(5000, 9)
    per_site = per_site_estimates(ms, 0.4, 0.4, SPEC, cfg)
    est = estimate_multi(ms, 0.4, 0.4, SPEC, cfg)
    assert est == pytest.approx(per_site.mean(), abs=1e-15)


def test_estimate_multi_identical_sites_close_to_single():
    site = two_arm_normal(2000, 2.0, 0.0, 7)
    ms = MultiSourceSample([site, site, site])
    cfg = MCIntegrationConfig(50_000, 11)
    multi = estimate_multi(ms, 0.3, 0.3, SPEC, cfg)
    single = estimate_single(site, 0.3, 0.3, SPEC, cfg)
    # same data, different MC streams per site
    assert abs(multi - single) < 0.02


def test_estimate_multi_empty_arm_names_site():
    ok = two_arm_normal(100, 0, 0, 1)
    broken = RandomizedSample(np.ones(50, dtype=int), np.random.default_rng(2).normal(size=50))
    ms = MultiSourceSample([ok, broken])
    with pytest.raises(EmptyArm, match="site 1"):
        estimate_multi(ms, 0.4, 0.4, SPEC, MCIntegrationConfig(2000, 0))


def test_estimate_observational_null_randomized_x():
    gen = np.random.default_rng(13)
    n = 2000
    X = gen.random((n, 1))
    A = (gen.random(n) < 0.5).astype(int)  # X irrelevant to treatment
    Y = gen.normal(0, 1, n)
    data = ObservationalSample(X, A, Y)
    est = estimate_observational(
        data, 0.4, SPEC, CrossFitPlan(2, 3), cfg=MCIntegrationConfig(30_000, 5)
    )
    assert est <= 0.2


def test_estimate_observational_confounded_matches_oracle():
    data, law = gen_confounded(4000, 17, "linear")
    h = 0.3
    est = estimate_observational(
        data, h, SPEC, CrossFitPlan(2, 7), cfg=MCIntegrationConfig(50_000, 3)
    )
    from oracles import l1_by_quadrature

    oracle = l1_by_quadrature(
        lambda y: law.smoothed_counterfactual_pdf(1, np.array([y]), SPEC, h)[0],
        lambda y: law.smoothed_counterfactual_pdf(0, np.array([y]), SPEC, h)[0],
        -8.0,
        10.0,
    )
    assert abs(est - oracle) <= 0.07


def test_estimate_observational_rejects_one_fold():
    with pytest.raises(ValueError):
        CrossFitPlan(n_folds=1)


# ---------------------------------------------------------------------------
# baselines
# ---------------------------------------------------------------------------


def test_diff_in_means_examples():
    data = RandomizedSample([1, 1, 0], [2.0, 4.0, 1.0])
    assert diff_in_means(data) == pytest.approx(2.0)
    same = RandomizedSample([1, 0], [3.0, 3.0])
    assert diff_in_means(same) == 0.0
    with pytest.raises(EmptyArm):
        diff_in_means(RandomizedSample([1, 1], [1.0, 2.0]))


def test_horvitz_thompson_examples():
    data = RandomizedSample([1, 0], [3.0, 1.0], pi1=0.5)
    assert horvitz_thompson(data) == pytest.approx((6.0 - 2.0) / 2.0)
    zeros = RandomizedSample([1, 0], [0.0, 0.0], pi1=0.5)
    assert horvitz_thompson(zeros) == 0.0
    with pytest.raises(ValueError):
        horvitz_thompson(RandomizedSample([1, 0], [1.0, 2.0]))


def test_horvitz_thompson_equals_diff_in_means_when_balanced():
    gen = np.random.default_rng(23)
    for _ in range(20):
        n = int(gen.integers(2, 40)) * 2
        A = np.concatenate([np.ones(n // 2, dtype=int), np.zeros(n // 2, dtype=int)])
        gen.shuffle(A)
        Y = gen.normal(0, 2, n)
        data = RandomizedSample(A, Y, pi1=0.5)
        assert horvitz_thompson(data) == pytest.approx(diff_in_means(data), abs=1e-10)


def make_linear_truth(n, seed, nonlinear=False):
    gen = np.random.default_rng(seed)
    X = gen.random((n, 1))
    A = (gen.random(n) < expit(2 * X[:, 0] - 1)).astype(int)
    fx = X[:, 0] ** 2 * 3.0 if nonlinear else X[:, 0]
    Y = 2.0 * A + fx + 0.5 * gen.normal(size=n)
    return ObservationalSample(X, A, Y)


def test_ate_plugin_regression():
    gen = np.random.default_rng(31)
    n = 1000
    X = gen.random((n, 1))
    A = (gen.random(n) < 0.5).astype(int)
    ya = ObservationalSample(X, A, A.astype(float))
    assert ate_plugin_regression(ya, "ridge-linear") == pytest.approx(1.0, abs=0.02)
    null = ObservationalSample(X, A, gen.normal(0, 1, n))
    assert abs(ate_plugin_regression(null, "ridge-linear")) < 0.15
    linear = make_linear_truth(2000, 33)
    assert abs(ate_plugin_regression(linear, "ridge-linear") - 2.0) < 0.1


def test_ate_ipw():
    gen = np.random.default_rng(37)
    n = 1000
    X = gen.random((n, 1))
    A = (gen.random(n) < 0.5).astype(int)
    ya = ObservationalSample(X, A, A.astype(float))
    assert ate_ipw(ya, "logistic") == pytest.approx(1.0, abs=0.05)
    null = ObservationalSample(X, A, gen.normal(0, 1, n))
    assert abs(ate_ipw(null, "logistic")) < 0.2
    linear = make_linear_truth(2000, 39)
    assert abs(ate_ipw(linear, "logistic") - 2.0) < 0.1


def test_ate_doubly_robust():
    gen = np.random.default_rng(41)
    n = 1000
    X = gen.random((n, 1))
    A = (gen.random(n) < 0.5).astype(int)
    ya = ObservationalSample(X, A, A.astype(float))
    assert ate_doubly_robust(ya, "logistic", "ridge-linear") == pytest.approx(1.0, abs=0.05)
    null = ObservationalSample(X, A, gen.normal(0, 1, n))
    assert abs(ate_doubly_robust(null, "logistic", "ridge-linear")) < 0.2
    # outcome model misspecified (linear fit to a quadratic), propensity correct
    curved = make_linear_truth(2000, 43, nonlinear=True)
    est = ate_doubly_robust(curved, "logistic", "ridge-linear", CrossFitPlan(2, 5))
    assert abs(est - 2.0) < 0.1


def test_arm_swap_antisymmetry_and_invariance():
    data = two_arm_normal(3000, 1.5, 0.0, 47)
    swapped = RandomizedSample(1 - data.A, data.Y, pi1=1 - data.pi1)
    assert diff_in_means(swapped) == pytest.approx(-diff_in_means(data), abs=1e-12)
    assert horvitz_thompson(swapped) == pytest.approx(-horvitz_thompson(data), abs=1e-12)
    cfg = MCIntegrationConfig(20_000, 53)
    d1 = estimate_single(data, 0.3, 0.3, SPEC, cfg)
    d2 = estimate_single(swapped, 0.3, 0.3, SPEC, cfg)
    assert d1 == d2  # same points, |q1-q0| = |q0-q1|

    obs = make_linear_truth(1500, 51)
    obs_swapped = ObservationalSample(obs.X, 1 - obs.A, obs.Y)
    assert ate_ipw(obs_swapped, "logistic") == pytest.approx(-ate_ipw(obs, "logistic"), abs=1e-9)
    assert ate_plugin_regression(obs_swapped, "ridge-linear") == pytest.approx(
        -ate_plugin_regression(obs, "ridge-linear"), abs=1e-9
    )


def test_default_bandwidth_resolved_from_pooled_outcomes():
    data = two_arm_normal(2000, 0.5, 0.0, 61)
    est = estimate_single(data, cfg=MCIntegrationConfig(20_000, 3))
    assert np.isfinite(est) and est >= 0.0


def test_report_helpers_have_confidence_fields():
    data = two_arm_normal(500, 1.0, 0.0, 67)
    rep = diff_in_means_report(data, alpha=0.05)
    assert rep["ci_lower"] <= rep["estimate"] <= rep["ci_upper"]
