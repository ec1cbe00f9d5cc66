"""Bootstrap confidence intervals for the distance estimators.

All three procedures build intervals centered at the point estimate. For
single-source and observational data the half-width sums, over the two
arms, an upper-tail quantile of the scaled bootstrap deviations
``sqrt(n) * D(density on resample, density on original)``. For
multi-source data it combines per-site row-bootstrap deviations with a
site-level bootstrap of the per-site estimates.

Replicates draw from per-replicate streams derived from (seed, replicate
index), so results are reproducible bit for bit and independent of
evaluation order. Resamples that lose a treatment arm are redrawn, up to a
bounded number of attempts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from . import rng
from .data import MultiSourceSample, ObservationalSample, RandomizedSample
from .density import SmoothedDensity, grid_interpolator, kde_conditional, silverman_bandwidth
from .distance import MCIntegrationConfig, l1_distance, l1_from_values, uniform_points
from .estimators import (
    DistanceReport,
    DRComponents,
    build_dr_components,
    per_site_estimates,
    single_source_distance,
)
from .kernels import KernelSpec, epanechnikov
from .nuisance import CrossFitPlan

_MAX_REDRAWS = 100


class DegenerateResample(Exception):
    """Could not draw a two-armed bootstrap resample within the attempt cap."""


@dataclass(frozen=True)
class BootstrapConfig:
    """Replicate count, level and seed for the bootstrap procedures."""

    n_replicates: int = 100
    alpha: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.n_replicates < 20:
            raise ValueError("need at least 20 bootstrap replicates")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie strictly between 0 and 1")


def quantile_hat(values, q: float) -> float:
    """inf{z : fraction of values exceeding z <= q}.

    Equals the ceil((1-q) * B)-th smallest of the B values.
    """
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("quantile of an empty value list")
    if not 0.0 <= q < 1.0:
        raise ValueError("quantile level must lie in [0, 1)")
    k = math.ceil((1.0 - q) * values.size)
    return float(np.sort(values)[k - 1])


def _resample_indices(gen: np.random.Generator, A: np.ndarray) -> np.ndarray:
    """Row indices of a with-replacement resample keeping both arms."""
    n = len(A)
    for _ in range(_MAX_REDRAWS):
        idx = gen.integers(0, n, size=n)
        picked = A[idx]
        if picked.min() == 0 and picked.max() == 1:
            return idx
    raise DegenerateResample(
        f"no two-armed resample after {_MAX_REDRAWS} attempts"
    )


def _arm_deviation(
    star: SmoothedDensity, orig_vals: np.ndarray, points: np.ndarray, volume: float
) -> float:
    return l1_from_values(star(points), orig_vals, volume)[0]


def ci_single(
    data: RandomizedSample,
    h1: float | None = None,
    h0: float | None = None,
    spec: KernelSpec | None = None,
    cfg: MCIntegrationConfig | None = None,
    bcfg: BootstrapConfig | None = None,
) -> DistanceReport:
    """Row-bootstrap interval for the single-source distance estimate.

    For each replicate the full rows are resampled with replacement, the
    arm KDEs are rebuilt, and the scaled deviation from the original KDE is
    recorded per arm: ``T_i_a = sqrt(n) * D(KDE on resample, KDE on
    original)``. The interval half-width is the sum of the two per-arm
    upper alpha/2 quantiles divided by sqrt(n).
    """
    spec = epanechnikov(data.dimension) if spec is None else spec
    cfg = MCIntegrationConfig() if cfg is None else cfg
    bcfg = BootstrapConfig() if bcfg is None else bcfg
    if h1 is None or h0 is None:
        h = silverman_bandwidth(data.Y)
        h1 = h if h1 is None else h1
        h0 = h if h0 is None else h0
    estimate, mc_stderr, q1, q0 = single_source_distance(data, h1, h0, spec, cfg)
    n = data.n
    bandwidths = {1: h1, 0: h0}
    originals = {1: q1, 0: q0}
    points, orig_vals = {}, {}
    for a in (0, 1):
        pt_seed = int(rng.derive(cfg.seed, bcfg.seed, 0xA0 + a).integers(0, 2**62))
        points[a] = uniform_points(originals[a].region, cfg.n_points, pt_seed)
        orig_vals[a] = originals[a](points[a])
    B = bcfg.n_replicates
    T = np.empty((B, 2))
    sqrt_n = math.sqrt(n)
    for i in range(B):
        gen = rng.derive(bcfg.seed, 0xB001, i)
        idx = _resample_indices(gen, data.A)
        boot = data.take(idx)
        for a in (0, 1):
            star = kde_conditional(boot, a, bandwidths[a], spec)
            T[i, a] = sqrt_n * _arm_deviation(
                star, orig_vals[a], points[a], originals[a].region.volume
            )
    z0 = quantile_hat(T[:, 0], bcfg.alpha / 2.0)
    z1 = quantile_hat(T[:, 1], bcfg.alpha / 2.0)
    half = (z0 + z1) / sqrt_n
    return DistanceReport(
        estimate=estimate,
        ci_lower=estimate - half,
        ci_upper=estimate + half,
        alpha=bcfg.alpha,
        method="single-source-kde",
        diagnostics={
            "mc_stderr": mc_stderr,
            "n_arm1": data.n_arm(1),
            "n_arm0": data.n_arm(0),
            "bootstrap_replicates": B,
            "bandwidth1": h1,
            "bandwidth0": h0,
            "kernel": spec.family,
            "z_alpha_half": {"arm0": z0, "arm1": z1},
        },
    )


def ci_multi(
    data: MultiSourceSample,
    h1: float | None = None,
    h0: float | None = None,
    spec: KernelSpec | None = None,
    cfg: MCIntegrationConfig | None = None,
    bcfg: BootstrapConfig | None = None,
) -> DistanceReport:
    """Two-level bootstrap interval for the multi-source distance estimate.

    Stage one resamples rows within each site once and averages the scaled
    per-arm KDE deviations across sites. Stage two bootstraps the sites
    themselves: each replicate resamples the N per-site estimates and
    records the scaled deviation of their mean. The half-width combines
    both stages; with unequal site sizes the row-level term uses the
    harmonic mean of the per-site sizes.
    """
    spec = epanechnikov(data.dimension) if spec is None else spec
    cfg = MCIntegrationConfig() if cfg is None else cfg
    bcfg = BootstrapConfig() if bcfg is None else bcfg
    if h1 is None or h0 is None:
        h = silverman_bandwidth(np.vstack([s.Y for s in data.sites]))
        h1 = h if h1 is None else h1
        h0 = h if h0 is None else h0
    bandwidths = {1: h1, 0: h0}
    site_estimates = per_site_estimates(data, h1, h0, spec, cfg)
    estimate = float(site_estimates.mean())
    N = data.n_sites
    sizes = np.array([s.n for s in data.sites], dtype=float)

    d_bar = {0: 0.0, 1: 0.0}
    for i, site in enumerate(data.sites):
        gen = rng.derive(bcfg.seed, 0xB002, i)
        idx = _resample_indices(gen, site.A)
        boot = site.take(idx)
        for a in (0, 1):
            orig = kde_conditional(site, a, bandwidths[a], spec)
            pt_seed = int(
                rng.derive(cfg.seed, bcfg.seed, 0xC0 + a, i).integers(0, 2**62)
            )
            pts = uniform_points(orig.region, cfg.n_points, pt_seed)
            star = kde_conditional(boot, a, bandwidths[a], spec)
            dev = _arm_deviation(star, orig(pts), pts, orig.region.volume)
            d_bar[a] += math.sqrt(site.n) * dev / N

    B = bcfg.n_replicates
    T = np.empty(B)
    sqrt_N = math.sqrt(N)
    for j in range(B):
        gen = rng.derive(bcfg.seed, 0xB003, j)
        sidx = gen.integers(0, N, size=N)
        T[j] = sqrt_N * abs(float(site_estimates[sidx].mean()) - estimate)
    z = quantile_hat(T, bcfg.alpha)
    n_harmonic = len(sizes) / float(np.sum(1.0 / sizes))
    half = (d_bar[1] + d_bar[0]) / math.sqrt(n_harmonic) + z / sqrt_N
    return DistanceReport(
        estimate=estimate,
        ci_lower=estimate - half,
        ci_upper=estimate + half,
        alpha=bcfg.alpha,
        method="multi-source-kde",
        diagnostics={
            "n_sites": N,
            "site_sizes": sizes.astype(int).tolist(),
            "bootstrap_replicates": B,
            "bandwidth1": h1,
            "bandwidth0": h0,
            "kernel": spec.family,
            "row_level_deviation": {"arm0": d_bar[0], "arm1": d_bar[1]},
            "z_alpha": z,
            "harmonic_mean_site_size": n_harmonic,
        },
    )


def ci_observational(
    data: ObservationalSample,
    h: float | None = None,
    spec: KernelSpec | None = None,
    plan: CrossFitPlan | None = None,
    propensity_model="logistic",
    outcome_model="nadaraya-watson",
    cfg: MCIntegrationConfig | None = None,
    bcfg: BootstrapConfig | None = None,
    refit_nuisances: bool = False,
    grid_points_per_dim: int | None = None,
    ridge_lambda: float = 1e-6,
) -> DistanceReport:
    """Row-bootstrap interval for the observational distance estimate.

    Mirrors the single-source procedure with the doubly-robust
    pseudo-density in place of the KDE. By default the cross-fitted
    nuisances are held fixed across replicates (each resampled row keeps
    the fitted functions of the fold it originally belonged to), so a
    replicate only re-averages the per-row influence contributions;
    ``refit_nuisances=True`` refits them on every resample instead.
    """
    spec = epanechnikov(data.dimension) if spec is None else spec
    cfg = MCIntegrationConfig() if cfg is None else cfg
    bcfg = BootstrapConfig() if bcfg is None else bcfg
    plan = CrossFitPlan() if plan is None else plan
    if h is None:
        h = silverman_bandwidth(data.Y)
    comp = build_dr_components(
        data, h, spec, plan, propensity_model, outcome_model,
        grid_points_per_dim, ridge_lambda,
    )
    psi1, psi0 = comp.density(1), comp.density(0)
    estimate, mc_stderr = l1_distance(psi1, psi0, cfg)
    n = data.n
    sqrt_n = math.sqrt(n)
    pt_seed = int(rng.derive(cfg.seed, bcfg.seed, 0xD0).integers(0, 2**62))
    points = uniform_points(comp.region, cfg.n_points, pt_seed)
    orig_vals = {1: psi1(points), 0: psi0(points)}
    volume = comp.region.volume
    B = bcfg.n_replicates
    T = np.empty((B, 2))
    for i in range(B):
        gen = rng.derive(bcfg.seed, 0xB004, i)
        idx = _resample_indices(gen, data.A)
        if refit_nuisances:
            boot_plan = replace(
                plan, seed=int(rng.derive(plan.seed, 0xB005, i).integers(0, 2**62))
            )
            boot_comp = build_dr_components(
                data.take(idx), h, spec, boot_plan, propensity_model,
                outcome_model, grid_points_per_dim, ridge_lambda,
            )
            stars = {a: boot_comp.density(a) for a in (0, 1)}
        else:
            stars = {a: comp.density(a, idx) for a in (0, 1)}
        for a in (0, 1):
            T[i, a] = sqrt_n * _arm_deviation(stars[a], orig_vals[a], points, volume)
    z0 = quantile_hat(T[:, 0], bcfg.alpha / 2.0)
    z1 = quantile_hat(T[:, 1], bcfg.alpha / 2.0)
    half = (z0 + z1) / sqrt_n
    return DistanceReport(
        estimate=estimate,
        ci_lower=estimate - half,
        ci_upper=estimate + half,
        alpha=bcfg.alpha,
        method="observational-dr",
        diagnostics={
            "mc_stderr": mc_stderr,
            "n_arm1": data.n_arm(1),
            "n_arm0": data.n_arm(0),
            "bootstrap_replicates": B,
            "bandwidth": h,
            "kernel": spec.family,
            "folds": plan.n_folds,
            "refit_nuisances": refit_nuisances,
            "nuisances": comp.nuisance_diagnostics,
            "pseudo_density_min": {
                "arm0": comp.grid_minimum(0),
                "arm1": comp.grid_minimum(1),
            },
            "z_alpha_half": {"arm0": z0, "arm1": z1},
        },
    )
