"""Smoothed counterfactual densities.

Two constructions produce an evaluable density surface:

* ``kde_conditional`` - an arm-conditional kernel density estimate for
  randomized data: the average of bandwidth-scaled kernels centered at the
  outcomes of one treatment arm.
* ``dr_pseudo_density`` - a doubly-robust pseudo-density for observational
  data: at each grid point the empirical mean of an augmented
  inverse-propensity-weighted influence term. Its values may be negative
  pointwise; the signed surface is integrated as-is downstream.

Both return a :class:`SmoothedDensity` whose evaluator vanishes outside a
rectangular integration region covering the pooled outcome range expanded
by ``bandwidth * support_radius`` in every coordinate.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .data import ObservationalSample, RandomizedSample
from .kernels import KernelSpec

#: propensities below this are treated as positivity violations
EPS_CLIP = 1e-3


class EmptyArm(Exception):
    """A treatment arm holds no observations, so its density is undefined."""


class PropensityUnderflow(Exception):
    """A fitted or supplied propensity fell below the positivity guard."""


@dataclass(frozen=True)
class IntegrationRegion:
    """Axis-aligned box over which a smoothed density is supported."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.atleast_1d(np.asarray(self.lower, dtype=float))
        upper = np.atleast_1d(np.asarray(self.upper, dtype=float))
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        if lower.shape != upper.shape or lower.ndim != 1:
            raise ValueError("region bounds must be vectors of equal length")
        if not np.all(lower < upper):
            raise ValueError("region must have positive extent in every coordinate")

    @property
    def dimension(self) -> int:
        return len(self.lower)

    @property
    def volume(self) -> float:
        return float(np.prod(self.upper - self.lower))

    def union(self, other: "IntegrationRegion") -> "IntegrationRegion":
        """Bounding box of two regions (shared integration domain)."""
        if self.dimension != other.dimension:
            raise ValueError("regions differ in dimension")
        return IntegrationRegion(
            np.minimum(self.lower, other.lower),
            np.maximum(self.upper, other.upper),
        )

    def contains(self, points: np.ndarray) -> np.ndarray:
        pts = as_points(points, self.dimension)
        return np.all((pts >= self.lower) & (pts <= self.upper), axis=1)


@dataclass(frozen=True)
class SmoothedDensity:
    """An evaluable (possibly signed) smoothed density surface."""

    evaluator: Callable[[np.ndarray], np.ndarray]
    region: IntegrationRegion
    bandwidth: float
    arm: int
    kind: str  # "kde" or "dr-pseudo"
    n_obs: int

    @property
    def dimension(self) -> int:
        return self.region.dimension

    def __call__(self, points: np.ndarray) -> np.ndarray:
        return self.evaluator(as_points(points, self.dimension))


def as_points(points: np.ndarray, dimension: int) -> np.ndarray:
    """Coerce scalars / vectors / matrices into an (m, d) point array."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 0:
        pts = pts.reshape(1, 1)
    elif pts.ndim == 1:
        pts = pts[:, None] if dimension == 1 else pts[None, :]
    if pts.ndim != 2 or pts.shape[1] != dimension:
        raise ValueError(f"expected points of dimension {dimension}, got shape {pts.shape}")
    return pts


def region_for(Y: np.ndarray, h: float, spec: KernelSpec) -> IntegrationRegion:
    """Pooled outcome range expanded by h * support_radius per coordinate."""
    pad = h * spec.support_radius
    return IntegrationRegion(Y.min(axis=0) - pad, Y.max(axis=0) + pad)


def silverman_bandwidth(Y: np.ndarray) -> float:
    """Rule-of-thumb bandwidth from the pooled outcomes.

    For d = 1 this is 0.9 * min(sd, iqr/1.34) * n^(-1/5); for d > 1 the
    usual multivariate generalization with the per-coordinate scales
    averaged into a single radial bandwidth.
    """
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    n, d = Y.shape
    sd = Y.std(axis=0, ddof=1) if n > 1 else np.zeros(d)
    if d == 1:
        q75, q25 = np.percentile(Y[:, 0], [75, 25])
        scale = min(sd[0], (q75 - q25) / 1.34) if sd[0] > 0 else 0.0
        h = 0.9 * scale * n ** (-0.2)
    else:
        h = float(sd.mean()) * (4.0 / ((d + 2) * n)) ** (1.0 / (d + 4))
    return h if h > 0 else 1.0


# ---------------------------------------------------------------------------
# kernel sums
# ---------------------------------------------------------------------------


def scaled_kernel_matrix(
    spec: KernelSpec, Y: np.ndarray, points: np.ndarray, h: float
) -> np.ndarray:
    """Matrix of h^{-d} K(||Y_i - p_m|| / h), shape (len(Y), len(points))."""
    d = spec.dimension
    Y = as_points(Y, d)
    pts = as_points(points, d)
    out = np.empty((len(Y), len(pts)))
    chunk = max(1, 4_000_000 // max(1, len(pts)))
    for i0 in range(0, len(Y), chunk):
        blk = Y[i0 : i0 + chunk]
        diff = blk[:, None, :] - pts[None, :, :]
        r = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff)) / h
        out[i0 : i0 + chunk] = spec.profile(r)
    out *= spec.normalizing_constant / h**d
    return out


def _epanechnikov_sum_evaluator(
    Y: np.ndarray, h: float, n_norm: int, c: float
) -> Callable[[np.ndarray], np.ndarray]:
    """O((n + m) log n) evaluator for 1-D Epanechnikov kernel sums.

    The quadratic profile lets the windowed sum collapse onto prefix sums of
    (1, y, y^2) over the sorted, centered data.
    """
    ys = np.sort(Y[:, 0])
    mid = 0.5 * (ys[0] + ys[-1])  # center to limit cancellation in y^2 sums
    ys = ys - mid
    s1 = np.concatenate(([0.0], np.cumsum(ys)))
    s2 = np.concatenate(([0.0], np.cumsum(ys * ys)))
    scale = c / (n_norm * h)
    h2 = h * h

    def evaluator(points: np.ndarray) -> np.ndarray:
        p = points[:, 0] - mid
        lo = np.searchsorted(ys, p - h, side="left")
        hi = np.searchsorted(ys, p + h, side="right")
        w = (hi - lo).astype(float)
        t1 = s1[hi] - s1[lo]
        t2 = s2[hi] - s2[lo]
        vals = scale * (w - (p * p * w - 2.0 * p * t1 + t2) / h2)
        return np.maximum(vals, 0.0)

    return evaluator


def _generic_sum_evaluator(
    Y: np.ndarray, h: float, spec: KernelSpec, n_norm: int
) -> Callable[[np.ndarray], np.ndarray]:
    """Chunked direct evaluator for any family and dimension."""
    d = spec.dimension
    scale = spec.normalizing_constant / (n_norm * h**d)

    def evaluator(points: np.ndarray) -> np.ndarray:
        out = np.empty(len(points))
        chunk = max(1, 4_000_000 // max(1, len(Y)))
        for i0 in range(0, len(points), chunk):
            blk = points[i0 : i0 + chunk]
            diff = blk[:, None, :] - Y[None, :, :]
            r = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff)) / h
            out[i0 : i0 + chunk] = spec.profile(r).sum(axis=1)
        return scale * out

    return evaluator


def kde_conditional(
    data: RandomizedSample, a: int, h: float, spec: KernelSpec
) -> SmoothedDensity:
    """Arm-conditional kernel density estimate.

    Parameters
    ----------
    data : RandomizedSample
        Full sample; only rows with treatment ``a`` contribute kernels.
    a : int
        Target arm, 0 or 1.
    h : float
        Fixed bandwidth, > 0.
    spec : KernelSpec
        Kernel matching the outcome dimension.

    Raises
    ------
    EmptyArm
        If no row carries treatment ``a``.
    """
    if h <= 0:
        raise ValueError("bandwidth must be positive")
    if spec.dimension != data.dimension:
        raise ValueError("kernel dimension does not match the outcome dimension")
    n_a = data.n_arm(a)
    if n_a == 0:
        raise EmptyArm(f"no observations in arm {a}")
    Y_arm = data.arm(a)
    if spec.family == "epanechnikov" and data.dimension == 1:
        evaluator = _epanechnikov_sum_evaluator(
            Y_arm, h, n_a, spec.normalizing_constant
        )
    else:
        evaluator = _generic_sum_evaluator(Y_arm, h, spec, n_a)
    return SmoothedDensity(
        evaluator=evaluator,
        region=region_for(data.Y, h, spec),
        bandwidth=h,
        arm=a,
        kind="kde",
        n_obs=n_a,
    )


# ---------------------------------------------------------------------------
# doubly-robust pseudo-density
# ---------------------------------------------------------------------------


def grid_axes(region: IntegrationRegion, points_per_dim: int) -> list[np.ndarray]:
    """Uniform per-coordinate axes spanning the region."""
    if points_per_dim < 2:
        raise ValueError("need at least two grid points per dimension")
    return [
        np.linspace(lo, up, points_per_dim)
        for lo, up in zip(region.lower, region.upper)
    ]


def grid_from_axes(axes: list[np.ndarray]) -> np.ndarray:
    """Cartesian-product grid, shape (prod(len(axis)), d), C order."""
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def grid_interpolator(
    axes: list[np.ndarray], values: np.ndarray, region: IntegrationRegion
) -> Callable[[np.ndarray], np.ndarray]:
    """Evaluator from grid values: linear for d=1, nearest node for d>=2."""
    d = len(axes)
    if d == 1:
        axis = axes[0]

        def evaluator(points: np.ndarray) -> np.ndarray:
            return np.interp(points[:, 0], axis, values, left=0.0, right=0.0)

        return evaluator

    shaped = values.reshape([len(ax) for ax in axes])
    starts = np.array([ax[0] for ax in axes])
    steps = np.array([ax[1] - ax[0] for ax in axes])
    sizes = np.array([len(ax) for ax in axes])

    def evaluator(points: np.ndarray) -> np.ndarray:
        idx = np.rint((points - starts) / steps).astype(int)
        idx = np.clip(idx, 0, sizes - 1)
        out = shaped[tuple(idx.T)]
        return np.where(region.contains(points), out, 0.0)

    return evaluator


def dr_grid_values(
    fold: ObservationalSample,
    nuisance,
    grid: np.ndarray,
    h: float,
    spec: KernelSpec,
    a: int,
) -> np.ndarray:
    """Per-row influence contributions to the pseudo-density, shape (n, M).

    Row i, column m holds
    ``1(A_i=a) / pihat_a(X_i) * (T_m(Y_i) - muhat_a(X_i; m)) + muhat_a(X_i; m)``
    where ``T_m`` is the bandwidth-scaled kernel centered at grid point m.
    The pseudo-density value at grid point m is the column mean.
    """
    pi1 = np.asarray(nuisance.propensity(fold.X), dtype=float)
    pi_a = pi1 if a == 1 else 1.0 - pi1
    if np.any(pi_a < EPS_CLIP):
        raise PropensityUnderflow(
            f"propensity for arm {a} fell below {EPS_CLIP:g} "
            f"(min {pi_a.min():.3g}); positivity looks violated"
        )
    T = scaled_kernel_matrix(spec, fold.Y, grid, h)
    mu_a = np.asarray(nuisance.outcome_regression(fold.X, a), dtype=float)
    if mu_a.shape != T.shape:
        raise ValueError(
            f"outcome regression returned shape {mu_a.shape}, expected {T.shape}"
        )
    ind = (fold.A == a).astype(float)[:, None]
    return ind / pi_a[:, None] * (T - mu_a) + mu_a


def dr_pseudo_density(
    fold: ObservationalSample,
    nuisance,
    grid: np.ndarray,
    h: float,
    spec: KernelSpec,
    a: int,
    region: IntegrationRegion | None = None,
) -> SmoothedDensity:
    """Doubly-robust pseudo-density for arm ``a`` on an estimation fold.

    The nuisance fit must come from a disjoint training fold (or be a fixed,
    data-independent function). Grid values are the empirical means of the
    influence contributions; between grid points the surface is interpolated
    (linearly for d = 1, nearest node otherwise). Values may be negative;
    the minimum is available to callers as a diagnostic via the grid values.
    """
    grid = as_points(grid, spec.dimension)
    if region is None:
        region = IntegrationRegion(grid.min(axis=0), grid.max(axis=0))
    vals = dr_grid_values(fold, nuisance, grid, h, spec, a).mean(axis=0)
    axes = _axes_from_grid(grid, spec.dimension)
    return SmoothedDensity(
        evaluator=grid_interpolator(axes, vals, region),
        region=region,
        bandwidth=h,
        arm=a,
        kind="dr-pseudo",
        n_obs=fold.n,
    )


def _axes_from_grid(grid: np.ndarray, d: int) -> list[np.ndarray]:
    """Recover per-dimension axes from a C-ordered cartesian product grid."""
    if d == 1:
        return [grid[:, 0]]
    axes = [np.unique(grid[:, j]) for j in range(d)]
    if int(np.prod([len(ax) for ax in axes])) != len(grid):
        raise ValueError("grid is not a cartesian product of per-dimension axes")
    return axes
