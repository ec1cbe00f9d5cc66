"""Kernel family contracts: normalization, support, Lipschitz, symmetry."""

import math

import numpy as np
import pytest
from scipy import integrate

from cfdist import kernels
from cfdist.kernels import epanechnikov, evaluate, scaled_evaluate, truncated_gaussian


def all_specs():
    out = []
    for d in (1, 2, 3):
        out.append(epanechnikov(d))
        out.append(truncated_gaussian(d))
    return out


def sphere_area(d):
    return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)


def test_epanechnikov_center_and_support():
    spec = epanechnikov(1)
    assert evaluate(spec, 0.0) == pytest.approx(0.75)
    assert evaluate(spec, 1.5) == 0.0


def test_truncated_gaussian_center_matches_quadrature_oracle():
    spec = truncated_gaussian(1, radius=3.0)
    # independent renormalization: total mass of the shifted profile on [-3, 3]
    edge = math.exp(-4.5)
    mass, _ = integrate.quad(lambda x: math.exp(-0.5 * x * x) - edge, -3.0, 3.0)
    assert evaluate(spec, 0.0) == pytest.approx((1.0 - edge) / mass, rel=1e-10)


def test_scaled_evaluate_examples():
    s1 = epanechnikov(1)
    assert scaled_evaluate(s1, np.array([0.0]), np.array([0.0]), 2.0) == pytest.approx(0.375)
    assert scaled_evaluate(s1, np.array([0.0]), np.array([3.0]), 2.0) == 0.0
    s2 = epanechnikov(2)
    # normalize (1 - r^2) over the unit disk: c = 2 / pi
    c_oracle = 1.0 / integrate.dblquad(
        lambda y, x: max(1.0 - x * x - y * y, 0.0), -1, 1, -1, 1
    )[0]
    assert scaled_evaluate(s2, np.zeros(2), np.zeros(2), 1.0) == pytest.approx(
        c_oracle, rel=1e-6
    )


@pytest.mark.parametrize("spec", all_specs(), ids=lambda s: f"{s.family}-d{s.dimension}")
def test_unit_mass_by_radial_quadrature(spec):
    area = sphere_area(spec.dimension)
    val, _ = integrate.quad(
        lambda r: area
        * r ** (spec.dimension - 1)
        * spec.normalizing_constant
        * float(spec.profile(np.array([r]))[0]),
        0.0,
        spec.support_radius,
        limit=200,
    )
    assert val == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("spec", all_specs(), ids=lambda s: f"{s.family}-d{s.dimension}")
def test_lipschitz_on_sampled_pairs(spec):
    gen = np.random.default_rng(1234)
    d, R = spec.dimension, spec.support_radius
    u1 = gen.uniform(-1.5 * R, 1.5 * R, size=(500, d))
    u2 = u1 + gen.normal(0, 0.05 * R, size=(500, d))
    k1 = spec.normalizing_constant * spec.profile(np.linalg.norm(u1, axis=1))
    k2 = spec.normalizing_constant * spec.profile(np.linalg.norm(u2, axis=1))
    gaps = np.linalg.norm(u1 - u2, axis=1)
    assert np.all(np.abs(k1 - k2) <= spec.lipschitz_constant * gaps + 1e-12)


@pytest.mark.parametrize("spec", all_specs(), ids=lambda s: f"{s.family}-d{s.dimension}")
def test_monotone_nonincreasing_in_radius(spec):
    r = np.linspace(0.0, 1.2 * spec.support_radius, 400)
    vals = spec.profile(r)
    assert np.all(np.diff(vals) <= 1e-12)


def test_radial_symmetry_under_rotation():
    spec = epanechnikov(2)
    gen = np.random.default_rng(7)
    for _ in range(50):
        y = gen.normal(0, 0.5, 2)
        theta = gen.uniform(0, 2 * np.pi)
        rot = np.array(
            [[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]]
        )
        v1 = scaled_evaluate(spec, y, np.zeros(2), 0.8)
        v2 = scaled_evaluate(spec, rot @ y, np.zeros(2), 0.8)
        assert v1 == pytest.approx(v2, abs=1e-12)


@pytest.mark.parametrize(
    "spec,h",
    [(epanechnikov(1), 0.7), (truncated_gaussian(1), 1.3), (epanechnikov(2), 0.5)],
    ids=["epan-d1", "tgauss-d1", "epan-d2"],
)
def test_scaled_kernel_integrates_to_one_mc(spec, h):
    gen = np.random.default_rng(99)
    d, R = spec.dimension, spec.support_radius
    lo, hi = -h * R, h * R
    pts = gen.uniform(lo, hi, size=(200_000, d))
    r = np.linalg.norm(pts, axis=1) / h
    vals = spec.normalizing_constant * spec.profile(r) / h**d
    vol = (hi - lo) ** d
    est = vol * vals.mean()
    se = vol * vals.std(ddof=1) / np.sqrt(len(vals))
    assert abs(est - 1.0) <= 3 * se


def test_dimension_limits_and_errors():
    with pytest.raises(ValueError):
        epanechnikov(4)
    with pytest.raises(ValueError):
        truncated_gaussian(0)
    with pytest.raises(ValueError):
        kernels.by_name("box", 1)
    spec = epanechnikov(2)
    with pytest.raises(ValueError):
        scaled_evaluate(spec, np.zeros(2), np.zeros(3), 1.0)
    with pytest.raises(ValueError):
        scaled_evaluate(spec, np.zeros(2), np.zeros(2), 0.0)
    with pytest.raises(ValueError):
        evaluate(spec, -0.1)


def test_by_name_round_trip():
    assert kernels.by_name("epanechnikov", 2).family == "epanechnikov"
    assert kernels.by_name("tgauss", 1).family == "tgauss"


def test_sup_value_is_center_value():
    for spec in all_specs():
        assert spec.sup_value == pytest.approx(evaluate(spec, 0.0))
