"""Causal effects as L1 distances between counterfactual outcome distributions.

The package estimates the integrated absolute difference between smoothed
counterfactual outcome densities for three study designs (single-source
randomized, multi-source randomized, observational), with bootstrap
confidence intervals and conventional mean-effect baselines for
comparison.
"""

from .bootstrap import (
    BootstrapConfig,
    DegenerateResample,
    ci_multi,
    ci_observational,
    ci_single,
    quantile_hat,
)
from .data import MultiSourceSample, ObservationalSample, RandomizedSample
from .density import (
    EmptyArm,
    IntegrationRegion,
    PropensityUnderflow,
    SmoothedDensity,
    dr_pseudo_density,
    kde_conditional,
    silverman_bandwidth,
)
from .distance import MCIntegrationConfig, l1_distance
from .estimators import (
    DistanceReport,
    ate_doubly_robust,
    ate_ipw,
    ate_plugin_regression,
    diff_in_means,
    estimate_multi,
    estimate_observational,
    estimate_single,
    horvitz_thompson,
)
from .kernels import KernelSpec, epanechnikov, truncated_gaussian
from .nuisance import (
    CrossFitPlan,
    DegenerateArm,
    NuisanceFit,
    SingularDesign,
    cross_fit,
    fit_outcome_regression,
    fit_propensity,
)
from .simulate import (
    ConfoundedLaw,
    SuperDistributionSpec,
    gen_confounded,
    gen_multi_source,
    gen_single_samemean,
)

__version__ = "0.1.0"

__all__ = [
    "BootstrapConfig",
    "ConfoundedLaw",
    "CrossFitPlan",
    "DegenerateArm",
    "DegenerateResample",
    "DistanceReport",
    "EmptyArm",
    "IntegrationRegion",
    "KernelSpec",
    "MCIntegrationConfig",
    "MultiSourceSample",
    "NuisanceFit",
    "ObservationalSample",
    "PropensityUnderflow",
    "RandomizedSample",
    "SingularDesign",
    "SmoothedDensity",
    "SuperDistributionSpec",
    "ate_doubly_robust",
    "ate_ipw",
    "ate_plugin_regression",
    "ci_multi",
    "ci_observational",
    "ci_single",
    "cross_fit",
    "diff_in_means",
    "dr_pseudo_density",
    "epanechnikov",
    "estimate_multi",
    "estimate_observational",
    "estimate_single",
    "fit_outcome_regression",
    "fit_propensity",
    "gen_confounded",
    "gen_multi_source",
    "gen_single_samemean",
    "horvitz_thompson",
    "kde_conditional",
    "l1_distance",
    "quantile_hat",
    "silverman_bandwidth",
    "truncated_gaussian",
]
