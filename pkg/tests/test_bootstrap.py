"""Bootstrap quantile and the three confidence-interval procedures."""

import numpy as np
import pytest

from cfdist.bootstrap import (
    BootstrapConfig,
    DegenerateResample,
    _resample_indices,
    ci_multi,
    ci_observational,
    ci_single,
    quantile_hat,
)
from cfdist.data import MultiSourceSample, ObservationalSample, RandomizedSample
from cfdist.distance import MCIntegrationConfig
from cfdist.kernels import epanechnikov
from cfdist.nuisance import CrossFitPlan
from cfdist.rng import derive

from oracles import brute_force_quantile

SPEC = epanechnikov(1)


def two_arm_normal(n, m1, m0, seed, pi1=0.5):
    gen = np.random.default_rng(seed)
    A = (gen.random(n) < pi1).astype(int)
    Y = np.where(A == 1, gen.normal(m1, 1, n), gen.normal(m0, 1, n))
    return RandomizedSample(A, Y, pi1=pi1)


def test_quantile_hat_examples():
    assert quantile_hat([1, 2, 3, 4], 0.25) == 3.0
    assert quantile_hat([5.0] * 7, 0.1) == 5.0
    assert quantile_hat([1, 2, 3, 4], 0.0) == 4.0
    with pytest.raises(ValueError):
        quantile_hat([], 0.1)


def test_quantile_hat_matches_brute_force_scan():
    gen = np.random.default_rng(3)
    for _ in range(200):
        values = gen.normal(0, 1, int(gen.integers(1, 60)))
        q = float(gen.uniform(0.0, 0.99))
        assert quantile_hat(values, q) == brute_force_quantile(values, q)


def test_bootstrap_config_validation():
    with pytest.raises(ValueError):
        BootstrapConfig(n_replicates=10)
    with pytest.raises(ValueError):
        BootstrapConfig(alpha=0.0)
    with pytest.raises(ValueError):
        BootstrapConfig(alpha=1.0)


def test_resample_indices_redraw_cap():
    gen = derive(0)
    with pytest.raises(DegenerateResample):
        _resample_indices(gen, np.ones(12, dtype=int))


def test_ci_single_zero_width_on_identical_outcomes():
    data = RandomizedSample([1, 1, 0, 0, 1, 0], np.full(6, 2.5), pi1=0.5)
    rep = ci_single(data, 0.5, 0.5, SPEC,
                    MCIntegrationConfig(2000, 1), BootstrapConfig(25, 0.05, 2))
    assert rep.ci_lower == pytest.approx(rep.estimate)
    assert rep.ci_upper == pytest.approx(rep.estimate)


def test_ci_single_symmetric_and_ordered():
    data = two_arm_normal(800, 1.0, 0.0, 5)
    rep = ci_single(data, 0.3, 0.3, SPEC,
                    MCIntegrationConfig(5000, 3), BootstrapConfig(40, 0.05, 9))
    assert rep.ci_lower <= rep.estimate <= rep.ci_upper
    assert (rep.ci_upper - rep.estimate) == pytest.approx(
        rep.estimate - rep.ci_lower, abs=1e-12
    )


def test_ci_single_reproducible_bit_for_bit():
    data = two_arm_normal(600, 1.5, 0.0, 7)
    kwargs = dict(
        h1=0.4, h0=0.4, spec=SPEC,
        cfg=MCIntegrationConfig(4000, 11), bcfg=BootstrapConfig(30, 0.05, 13),
    )
    r1 = ci_single(data, **kwargs)
    r2 = ci_single(data, **kwargs)
    assert (r1.estimate, r1.ci_lower, r1.ci_upper) == (r2.estimate, r2.ci_lower, r2.ci_upper)


def test_ci_single_width_monotone_in_alpha():
    data = two_arm_normal(800, 2.0, 0.0, 17)
    cfg = MCIntegrationConfig(5000, 5)
    rep10 = ci_single(data, 0.3, 0.3, SPEC, cfg, BootstrapConfig(60, 0.10, 21))
    rep01 = ci_single(data, 0.3, 0.3, SPEC, cfg, BootstrapConfig(60, 0.01, 21))
    assert rep01.ci_lower <= rep10.ci_lower and rep10.ci_upper <= rep01.ci_upper


def test_ci_multi_single_site_width_from_row_level_only():
    site = two_arm_normal(400, 1.0, 0.0, 23)
    ms = MultiSourceSample([site])
    rep = ci_multi(ms, 0.4, 0.4, SPEC,
                   MCIntegrationConfig(4000, 7), BootstrapConfig(40, 0.05, 3))
    d = rep.diagnostics
    assert d["z_alpha"] == 0.0
    expected_half = (d["row_level_deviation"]["arm1"] + d["row_level_deviation"]["arm0"]) / np.sqrt(site.n)
    assert (rep.ci_upper - rep.estimate) == pytest.approx(expected_half, abs=1e-12)


def test_ci_multi_identical_sites_small_site_level_term():
    site = two_arm_normal(500, 1.0, 0.0, 29)
    ms = MultiSourceSample([site] * 5)
    rep = ci_multi(ms, 0.4, 0.4, SPEC,
                   MCIntegrationConfig(4000, 9), BootstrapConfig(60, 0.05, 5))
    # identical data, only MC seeds differ across sites: site spread is tiny
    assert rep.diagnostics["z_alpha"] <= 0.15


def test_ci_multi_unequal_sites_uses_harmonic_mean():
    ms = MultiSourceSample([
        two_arm_normal(200, 1.0, 0.0, 31),
        two_arm_normal(800, 1.0, 0.0, 37),
    ])
    rep = ci_multi(ms, 0.4, 0.4, SPEC,
                   MCIntegrationConfig(4000, 11), BootstrapConfig(30, 0.05, 7))
    assert rep.diagnostics["harmonic_mean_site_size"] == pytest.approx(320.0)


def test_ci_observational_zero_width_on_degenerate_rows():
    n = 40
    X = np.full((n, 1), 0.5)
    A = np.tile([1, 0], n // 2)
    Y = np.full(n, 1.0)
    data = ObservationalSample(X, A, Y)
    rep = ci_observational(
        data, h=0.5, spec=SPEC, plan=CrossFitPlan(2, 1),
        cfg=MCIntegrationConfig(2000, 3), bcfg=BootstrapConfig(25, 0.05, 5),
        grid_points_per_dim=32,
    )
    assert rep.ci_upper - rep.ci_lower == pytest.approx(0.0, abs=1e-10)


def test_ci_observational_symmetric_and_reproducible():
    gen = np.random.default_rng(41)
    n = 400
    X = gen.random((n, 1))
    A = (gen.random(n) < 0.5).astype(int)
    Y = gen.normal(0, 1, n) + A
    data = ObservationalSample(X, A, Y)
    kwargs = dict(
        h=0.4, spec=SPEC, plan=CrossFitPlan(2, 3),
        cfg=MCIntegrationConfig(4000, 5), bcfg=BootstrapConfig(30, 0.05, 7),
        grid_points_per_dim=64,
    )
    r1 = ci_observational(data, **kwargs)
    r2 = ci_observational(data, **kwargs)
    assert (r1.estimate, r1.ci_lower, r1.ci_upper) == (r2.estimate, r2.ci_lower, r2.ci_upper)
    assert (r1.ci_upper - r1.estimate) == pytest.approx(r1.estimate - r1.ci_lower, abs=1e-12)


def test_ci_observational_refit_path_runs():
    gen = np.random.default_rng(43)
    n = 150
    X = gen.random((n, 1))
    A = (gen.random(n) < 0.5).astype(int)
    Y = gen.normal(0, 1, n) + 0.5 * A
    data = ObservationalSample(X, A, Y)
    rep = ci_observational(
        data, h=0.5, spec=SPEC, plan=CrossFitPlan(2, 5),
        cfg=MCIntegrationConfig(2000, 7), bcfg=BootstrapConfig(20, 0.1, 9),
        refit_nuisances=True, grid_points_per_dim=32,
        propensity_model="logistic", outcome_model="ridge-linear",
    )
    assert rep.ci_lower <= rep.estimate <= rep.ci_upper
    assert rep.diagnostics["refit_nuisances"] is True
