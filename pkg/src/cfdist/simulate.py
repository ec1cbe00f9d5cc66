"""Synthetic data generators with oracle-known laws.

``gen_single_samemean`` and ``gen_multi_source`` reproduce the two
randomized benchmark designs: treatment arms whose outcome distributions
differ in shape but share the same mean, so mean-effect estimators see
nothing while the distributional distance does not. ``gen_confounded``
produces observational data with a known logistic treatment mechanism and
returns the generative law alongside the sample so tests can build
quadrature oracles against it.

Every generator is a pure function of (parameters, seed).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit
from scipy.stats import norm

from . import rng
from .data import MultiSourceSample, ObservationalSample, RandomizedSample
from .kernels import KernelSpec

SINGLE_KINDS = ("two-beta", "uni-vs-bimodal")

#: mixture parameters for the uni-vs-bimodal design (chosen to give clearly
#: separated modes with equal arm means; not tied to any published table)
BIMODAL_MU = 2.0
BIMODAL_SD = 0.75

#: beta-distribution shape pairs for the two-beta design (equal means)
BETA_ARM0 = (2.0, 2.0)
BETA_ARM1 = (0.5, 0.5)


def gen_single_samemean(kind: str, n: int, seed: int) -> RandomizedSample:
    """Randomized sample whose two arms share the same population mean.

    kind "uni-vs-bimodal": arm 0 is standard normal, arm 1 an equal mixture
    of normals at +/- BIMODAL_MU with sd BIMODAL_SD (both means zero).
    kind "two-beta": arm 0 is Beta(2, 2), arm 1 Beta(1/2, 1/2) (both means
    one half).
    """
    if n < 2:
        raise ValueError("need at least two rows")
    if kind not in SINGLE_KINDS:
        raise ValueError(f"unknown kind {kind!r} (choose from {SINGLE_KINDS})")
    gen = rng.derive(seed, 0x510)
    A = (gen.random(n) < 0.5).astype(np.int64)
    y = np.empty(n)
    n1 = int(A.sum())
    if kind == "uni-vs-bimodal":
        y[A == 0] = gen.standard_normal(n - n1)
        signs = np.where(gen.random(n1) < 0.5, 1.0, -1.0)
        y[A == 1] = signs * BIMODAL_MU + BIMODAL_SD * gen.standard_normal(n1)
    else:
        y[A == 0] = gen.beta(*BETA_ARM0, size=n - n1)
        y[A == 1] = gen.beta(*BETA_ARM1, size=n1)
    return RandomizedSample(A, y, pi1=0.5)


@dataclass(frozen=True)
class SuperDistributionSpec:
    """Site-level parameter law for the multi-source design.

    Each site draws (u1, u2, u3, u4, w) once; arm 0 outcomes are
    N(0, u1^2) and arm 1 outcomes the mixture
    w * N((1-w) u2, u3^2) + (1-w) * N(-w u2, u4^2), whose mean is zero by
    construction.
    """

    u1_range: tuple[float, float] = (0.5, 1.5)
    u2_range: tuple[float, float] = (1.0, 5.0)
    u3_range: tuple[float, float] = (0.5, 1.5)
    u4_range: tuple[float, float] = (0.5, 1.5)
    w_range: tuple[float, float] = (0.25, 0.75)
    treat_prob: float = 0.5
    n_sites: int = 50
    site_size: int = 100

    def __post_init__(self):
        for lo, hi in (self.u1_range, self.u2_range, self.u3_range, self.u4_range):
            if not 0 < lo < hi:
                raise ValueError("scale ranges must be positive and increasing")
        lo, hi = self.w_range
        if not 0 < lo < hi < 1:
            raise ValueError("mixture-weight range must lie inside (0, 1)")
        if not 0 < self.treat_prob < 1:
            raise ValueError("treatment probability must lie inside (0, 1)")
        if self.n_sites < 1 or self.site_size < 2:
            raise ValueError("need at least one site with at least two rows")


def gen_site(spec: SuperDistributionSpec, site_rng: np.random.Generator) -> RandomizedSample:
    """One site: draw the site parameters, then the rows."""
    u1 = site_rng.uniform(*spec.u1_range)
    u2 = site_rng.uniform(*spec.u2_range)
    u3 = site_rng.uniform(*spec.u3_range)
    u4 = site_rng.uniform(*spec.u4_range)
    w = site_rng.uniform(*spec.w_range)
    n = spec.site_size
    A = (site_rng.random(n) < spec.treat_prob).astype(np.int64)
    y = np.empty(n)
    n1 = int(A.sum())
    y[A == 0] = u1 * site_rng.standard_normal(n - n1)
    first = site_rng.random(n1) < w
    loc = np.where(first, (1.0 - w) * u2, -w * u2)
    scale = np.where(first, u3, u4)
    y[A == 1] = loc + scale * site_rng.standard_normal(n1)
    return RandomizedSample(A, y, pi1=spec.treat_prob)


def gen_multi_source(spec: SuperDistributionSpec, seed: int) -> MultiSourceSample:
    """Draw n_sites independent sites from the super-distribution."""
    sites = [
        gen_site(spec, rng.derive(seed, 0x9E0, i)) for i in range(spec.n_sites)
    ]
    return MultiSourceSample(sites)


# ---------------------------------------------------------------------------
# confounded observational fixture
# ---------------------------------------------------------------------------

CONFOUNDED_SCENARIOS = ("linear", "null")


@dataclass(frozen=True)
class ConfoundedLaw:
    """Closed-form generative law behind ``gen_confounded``.

    Treatment follows P(A=1|X=x) = expit(2 x_1 - 1); outcomes are normal
    with mean ``treatment_shift * a + slope * (2 x_1 - 1)`` and
    standard deviation ``noise_sd``. Only the first covariate matters;
    any others are noise. The counterfactual outcome density is a uniform
    location mixture of normals and has a closed form.
    """

    scenario: str
    treatment_shift: float
    slope: float
    noise_sd: float = 1.0

    def propensity(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return expit(2.0 * X[:, 0] - 1.0)

    def conditional_mean(self, a: int, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return self.treatment_shift * a + self.slope * (2.0 * X[:, 0] - 1.0)

    def counterfactual_pdf(self, a: int, y: np.ndarray) -> np.ndarray:
        """Density of the counterfactual outcome under arm ``a``."""
        y = np.asarray(y, dtype=float)
        center = self.treatment_shift * a
        if self.slope == 0:
            return norm.pdf(y, loc=center, scale=self.noise_sd)
        upper = (y - center + self.slope) / self.noise_sd
        lower = (y - center - self.slope) / self.noise_sd
        return (norm.cdf(upper) - norm.cdf(lower)) / (2.0 * self.slope)

    def smoothed_counterfactual_pdf(
        self, a: int, y: np.ndarray, spec: KernelSpec, h: float, n_nodes: int = 96
    ) -> np.ndarray:
        """Kernel-smoothed counterfactual density by Gauss-Legendre quadrature."""
        y = np.asarray(y, dtype=float)
        nodes, weights = np.polynomial.legendre.leggauss(n_nodes)
        u = nodes * spec.support_radius
        w = weights * spec.support_radius
        kern = spec.normalizing_constant * spec.profile(np.abs(u))
        vals = self.counterfactual_pdf(a, y[:, None] - h * u[None, :])
        return vals @ (w * kern)

    def oracle_outcome_regression(self, spec: KernelSpec, h: float, n_nodes: int = 64):
        """True (X, a, grid) -> E[T(y_m) | A=a, X] map for oracle analyses."""
        nodes, weights = np.polynomial.legendre.leggauss(n_nodes)
        u = nodes * spec.support_radius
        w = weights * spec.support_radius
        kern = w * spec.normalizing_constant * spec.profile(np.abs(u))

        def mu(X: np.ndarray, a: int, grid: np.ndarray) -> np.ndarray:
            grid = np.asarray(grid, dtype=float).reshape(-1)
            loc = self.conditional_mean(a, X)
            # E over Y ~ N(loc, sd^2) of h^{-1} K((y_m - Y)/h)
            args = grid[None, :, None] - h * u[None, None, :] - loc[:, None, None]
            dens = norm.pdf(args / self.noise_sd) / self.noise_sd
            return dens @ kern

        return mu


def gen_confounded(
    n: int,
    seed: int,
    scenario: str = "linear",
    n_covariates: int = 1,
    slope: float = 1.5,
    treatment_shift: float = 2.0,
) -> tuple[ObservationalSample, ConfoundedLaw]:
    """Confounded observational sample plus its generative law.

    scenario "linear" shifts arm 1 by ``treatment_shift``; scenario "null"
    gives both arms the same conditional law, so the distance is zero.
    """
    if scenario not in CONFOUNDED_SCENARIOS:
        raise ValueError(
            f"unknown scenario {scenario!r} (choose from {CONFOUNDED_SCENARIOS})"
        )
    law = ConfoundedLaw(
        scenario=scenario,
        treatment_shift=treatment_shift if scenario == "linear" else 0.0,
        slope=slope,
    )
    gen = rng.derive(seed, 0x0B5)
    X = gen.random((n, n_covariates))
    A = (gen.random(n) < law.propensity(X)).astype(np.int64)
    y = law.conditional_mean(0, X) + law.treatment_shift * A
    y = y + law.noise_sd * gen.standard_normal(n)
    return ObservationalSample(X, A, y), law
