"""Monte-Carlo L1 distance: exactness properties, oracle recovery, bounds."""

import numpy as np
import pytest
from scipy.stats import norm

from cfdist.data import RandomizedSample
from cfdist.density import IntegrationRegion, SmoothedDensity, kde_conditional
from cfdist.distance import MCIntegrationConfig, default_n_points, l1_distance
from cfdist.kernels import epanechnikov

from oracles import l1_by_quadrature


def wrap(fn, region):
    return SmoothedDensity(
        evaluator=lambda p: fn(p[:, 0]),
        region=region,
        bandwidth=1.0,
        arm=0,
        kind="kde",
        n_obs=1,
    )


def test_identity_is_exactly_zero():
    reg = IntegrationRegion([-5.0], [5.0])
    p = wrap(lambda y: norm.pdf(y), reg)
    est, se = l1_distance(p, p, MCIntegrationConfig(2000, 0))
    assert est == 0.0 and se == 0.0


def test_disjoint_uniforms_distance_two():
    reg = IntegrationRegion([-0.5], [3.5])
    p = wrap(lambda y: ((y >= 0) & (y <= 1)).astype(float), reg)
    q = wrap(lambda y: ((y >= 2) & (y <= 3)).astype(float), reg)
    est, se = l1_distance(p, q, MCIntegrationConfig(100_000, 4))
    assert abs(est - 2.0) <= 3 * se


def test_shifted_normals_match_quadrature_oracle():
    reg = IntegrationRegion([-6.0], [8.0])
    p = wrap(lambda y: norm.pdf(y), reg)
    q = wrap(lambda y: norm.pdf(y, loc=2.0), reg)
    est, se = l1_distance(p, q, MCIntegrationConfig(100_000, 11))
    oracle = l1_by_quadrature(lambda y: norm.pdf(y), lambda y: norm.pdf(y, 2.0), -6, 8)
    assert oracle == pytest.approx(2 * (2 * norm.cdf(1) - 1), abs=1e-6)
    assert abs(est - oracle) <= 3 * se


def test_symmetry_is_exact():
    reg = IntegrationRegion([-4.0], [6.0])
    p = wrap(lambda y: norm.pdf(y), reg)
    q = wrap(lambda y: norm.pdf(y, 1.5, 0.7), reg)
    cfg = MCIntegrationConfig(5000, 21)
    assert l1_distance(p, q, cfg) == l1_distance(q, p, cfg)


def test_seed_determinism_bit_for_bit():
    gen = np.random.default_rng(2)
    data = RandomizedSample((gen.random(500) < 0.5).astype(int), gen.normal(0, 1, 500))
    p = kde_conditional(data, 1, 0.4, epanechnikov(1))
    q = kde_conditional(data, 0, 0.4, epanechnikov(1))
    cfg = MCIntegrationConfig(20_000, 1234)
    assert l1_distance(p, q, cfg) == l1_distance(p, q, cfg)
    other = l1_distance(p, q, MCIntegrationConfig(20_000, 1235))
    assert other != l1_distance(p, q, cfg)


def test_estimate_within_theoretical_range():
    gen = np.random.default_rng(9)
    data = RandomizedSample(
        (gen.random(2000) < 0.5).astype(int), gen.normal(0, 1, 2000)
    )
    p = kde_conditional(data, 1, 0.3, epanechnikov(1))
    q = kde_conditional(data, 0, 0.3, epanechnikov(1))
    est, se = l1_distance(p, q, MCIntegrationConfig(50_000, 3))
    assert 0.0 <= est <= 2.0 + 3 * se


def test_quadrilateral_inequality_over_random_kdes():
    """|D(Q1,Q2) - D(Q3,Q4)| <= D(Q1,Q3) + D(Q2,Q4) up to MC error."""
    gen = np.random.default_rng(31)
    spec = epanechnikov(1)
    cfg = MCIntegrationConfig(4000, 77)
    for trial in range(200):
        dens = []
        for _ in range(4):
            n = int(gen.integers(40, 160))
            data = RandomizedSample(
                np.ones(n, dtype=int),
                gen.normal(gen.uniform(-1, 1), gen.uniform(0.5, 2.0), n),
            )
            dens.append(kde_conditional(data, 1, gen.uniform(0.2, 0.8), spec))
        q1, q2, q3, q4 = dens
        d12, s12 = l1_distance(q1, q2, cfg)
        d34, s34 = l1_distance(q3, q4, cfg)
        d13, s13 = l1_distance(q1, q3, cfg)
        d24, s24 = l1_distance(q2, q4, cfg)
        slack = 6 * max(s12, s34, s13, s24)
        assert abs(d12 - d34) <= d13 + d24 + slack, f"trial {trial}"


def test_config_validation_and_dimension_mismatch():
    with pytest.raises(ValueError):
        MCIntegrationConfig(500, 0)
    p1 = wrap(lambda y: norm.pdf(y), IntegrationRegion([-3.0], [3.0]))
    p2 = SmoothedDensity(
        evaluator=lambda p: np.zeros(len(p)),
        region=IntegrationRegion([-3.0, -3.0], [3.0, 3.0]),
        bandwidth=1.0,
        arm=0,
        kind="kde",
        n_obs=1,
    )
    with pytest.raises(ValueError):
        l1_distance(p1, p2, MCIntegrationConfig(2000, 0))


def test_default_point_counts_scale_with_dimension():
    assert default_n_points(1) == 100_000
    assert default_n_points(2) == 1_000_000
    assert default_n_points(3) == 10_000_000
