"""Radial kernels with bounded support and known constants.

Two families are provided. ``epanechnikov`` is the default: it has compact
support, is Lipschitz, and its normalizing constants are exact in closed
form. ``tgauss`` is a Gaussian profile shifted and truncated at a finite
radius; the shift keeps the profile continuous (hence Lipschitz) at the
support edge, and the normalizing constant is found by radial quadrature.

Dimensions 1-3 are supported; the normalizing constants for d > 3 are not
precomputed and such kernels are rejected at construction time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

FAMILIES = ("epanechnikov", "tgauss")

#: exact Epanechnikov normalizers c_d for d = 1, 2, 3
_EPAN_NORM = {1: 0.75, 2: 2.0 / math.pi, 3: 15.0 / (8.0 * math.pi)}
#: exact L2 norms for the normalized Epanechnikov kernel, d = 1, 2, 3
_EPAN_L2 = {
    1: math.sqrt(3.0 / 5.0),
    2: math.sqrt(4.0 / (3.0 * math.pi)),
    3: math.sqrt(15.0 / (14.0 * math.pi)),
}


def _sphere_area(d: int) -> float:
    """Surface area of the unit sphere in R^d."""
    return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)


@dataclass(frozen=True)
class KernelSpec:
    """A normalized radial kernel K(u) = c_d * profile(||u||).

    Attributes
    ----------
    family : str
        "epanechnikov" or "tgauss".
    dimension : int
        Dimension d of the argument space, 1 <= d <= 3.
    support_radius : float
        R such that K(u) = 0 for ||u|| > R.
    normalizing_constant : float
        c_d making the kernel integrate to one over R^d.
    lipschitz_constant : float
        L with |K(u1) - K(u2)| <= L * ||u1 - u2||.
    l2_norm : float
        sqrt(integral of K^2).
    """

    family: str
    dimension: int
    support_radius: float
    normalizing_constant: float
    lipschitz_constant: float
    l2_norm: float

    @property
    def sup_value(self) -> float:
        """Maximum of K, attained at the origin."""
        return self.normalizing_constant * float(self.profile(np.zeros(1))[0])

    def profile(self, r: np.ndarray) -> np.ndarray:
        """Unnormalized radial profile at radii ``r`` (zero beyond support)."""
        r = np.asarray(r, dtype=float)
        if self.family == "epanechnikov":
            return np.where(r <= 1.0, 1.0 - r * r, 0.0)
        edge = math.exp(-0.5 * self.support_radius**2)
        val = np.exp(-0.5 * r * r) - edge
        return np.where(r <= self.support_radius, np.maximum(val, 0.0), 0.0)


def epanechnikov(dimension: int) -> KernelSpec:
    """Epanechnikov kernel c_d * (1 - ||u||^2) on the unit ball."""
    _check_dimension(dimension)
    c = _EPAN_NORM[dimension]
    return KernelSpec(
        family="epanechnikov",
        dimension=dimension,
        support_radius=1.0,
        normalizing_constant=c,
        lipschitz_constant=2.0 * c,
        l2_norm=_EPAN_L2[dimension],
    )


def truncated_gaussian(dimension: int, radius: float = 3.0) -> KernelSpec:
    """Gaussian profile shifted to zero at ``radius`` and renormalized.

    The raw profile exp(-r^2/2) - exp(-radius^2/2) vanishes continuously at
    the support edge, so the kernel stays Lipschitz while keeping bounded
    support. The normalizer and L2 norm come from 1-D radial quadrature.
    """
    _check_dimension(dimension)
    if radius <= 0:
        raise ValueError("truncation radius must be positive")
    edge = math.exp(-0.5 * radius**2)
    area = _sphere_area(dimension)

    def shell(r: float) -> float:
        return r ** (dimension - 1) * (math.exp(-0.5 * r * r) - edge)

    mass, _ = integrate.quad(shell, 0.0, radius, epsabs=1e-12, epsrel=1e-12)
    c = 1.0 / (area * mass)
    sq, _ = integrate.quad(
        lambda r: r ** (dimension - 1) * (math.exp(-0.5 * r * r) - edge) ** 2,
        0.0,
        radius,
        epsabs=1e-14,
        epsrel=1e-12,
    )
    # |d/dr profile| = r exp(-r^2/2), maximized at r = min(1, radius)
    rmax = min(1.0, radius)
    lip = c * rmax * math.exp(-0.5 * rmax * rmax)
    return KernelSpec(
        family="tgauss",
        dimension=dimension,
        support_radius=radius,
        normalizing_constant=c,
        lipschitz_constant=lip,
        l2_norm=math.sqrt(c * c * area * sq),
    )


def by_name(name: str, dimension: int) -> KernelSpec:
    """Build a kernel from its CLI name ("epanechnikov" or "tgauss")."""
    if name == "epanechnikov":
        return epanechnikov(dimension)
    if name == "tgauss":
        return truncated_gaussian(dimension)
    raise ValueError(f"unknown kernel family: {name!r} (choose from {FAMILIES})")


def evaluate(spec: KernelSpec, r: float) -> float:
    """Kernel value at radius ``r`` >= 0."""
    if r < 0:
        raise ValueError("radius must be nonnegative")
    return spec.normalizing_constant * float(spec.profile(np.asarray([r]))[0])


def scaled_evaluate(spec: KernelSpec, y: np.ndarray, y0: np.ndarray, h: float) -> float:
    """Bandwidth-scaled kernel h^{-d} K(||y - y0|| / h) at a single pair."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    y0 = np.atleast_1d(np.asarray(y0, dtype=float))
    if y.shape != y0.shape or y.ndim != 1 or y.size != spec.dimension:
        raise ValueError(
            f"points must both have dimension {spec.dimension}, "
            f"got shapes {y.shape} and {y0.shape}"
        )
    if h <= 0:
        raise ValueError("bandwidth must be positive")
    r = float(np.linalg.norm(y - y0)) / h
    return evaluate(spec, r) / h**spec.dimension


def _check_dimension(dimension: int) -> None:
    if not 1 <= dimension <= 3:
        raise ValueError(
            "kernel dimension must be 1, 2 or 3 "
            "(normalizing constants for d > 3 are not precomputed)"
        )
