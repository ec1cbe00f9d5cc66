"""Dataset containers for the three study designs."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def _as_outcome_matrix(Y) -> np.ndarray:
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    if Y.ndim != 2:
        raise ValueError("outcomes must be a vector or a 2-D array")
    return Y


def _as_binary(A) -> np.ndarray:
    A = np.asarray(A)
    if not np.isin(A, (0, 1)).all():
        raise ValueError("treatment indicators must all be 0 or 1")
    return A.astype(np.int64)


@dataclass(frozen=True)
class RandomizedSample:
    """Rows (A, Y) from a randomized study with binary treatment.

    ``pi1`` is the known randomization probability P(A=1), when available;
    it is required only by the Horvitz-Thompson baseline.
    """

    A: np.ndarray
    Y: np.ndarray
    pi1: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "A", _as_binary(self.A))
        object.__setattr__(self, "Y", _as_outcome_matrix(self.Y))
        if len(self.A) != len(self.Y):
            raise ValueError("A and Y must have the same length")
        if len(self.A) == 0:
            raise ValueError("sample is empty")
        if self.pi1 is not None and not 0.0 < self.pi1 < 1.0:
            raise ValueError("pi1 must lie strictly between 0 and 1")

    @property
    def n(self) -> int:
        return len(self.A)

    @property
    def dimension(self) -> int:
        return self.Y.shape[1]

    def n_arm(self, a: int) -> int:
        return int(np.sum(self.A == a))

    def arm(self, a: int) -> np.ndarray:
        """Outcome rows of arm ``a``."""
        return self.Y[self.A == a]

    def take(self, idx: np.ndarray) -> "RandomizedSample":
        """Row subset (used by bootstrap resampling)."""
        return RandomizedSample(self.A[idx], self.Y[idx], self.pi1)


@dataclass(frozen=True)
class MultiSourceSample:
    """A collection of per-site randomized samples sharing one outcome space."""

    sites: list[RandomizedSample] = field(default_factory=list)

    def __post_init__(self):
        if not self.sites:
            raise ValueError("need at least one site")
        d = self.sites[0].dimension
        if any(s.dimension != d for s in self.sites):
            raise ValueError("all sites must share the outcome dimension")

    @property
    def n_sites(self) -> int:
        return len(self.sites)

    @property
    def dimension(self) -> int:
        return self.sites[0].dimension


@dataclass(frozen=True)
class ObservationalSample:
    """Rows (X, A, Y) from an observational study."""

    X: np.ndarray
    A: np.ndarray
    Y: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if X.ndim != 2:
            raise ValueError("covariates must be a vector or a 2-D array")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "A", _as_binary(self.A))
        object.__setattr__(self, "Y", _as_outcome_matrix(self.Y))
        if not len(self.X) == len(self.A) == len(self.Y):
            raise ValueError("X, A and Y must have the same length")
        if len(self.A) == 0:
            raise ValueError("sample is empty")

    @property
    def n(self) -> int:
        return len(self.A)

    @property
    def dimension(self) -> int:
        return self.Y.shape[1]

    @property
    def n_covariates(self) -> int:
        return self.X.shape[1]

    def n_arm(self, a: int) -> int:
        return int(np.sum(self.A == a))

    def take(self, idx: np.ndarray) -> "ObservationalSample":
        return ObservationalSample(self.X[idx], self.A[idx], self.Y[idx])

    def subset(self, mask: np.ndarray) -> "ObservationalSample":
        return ObservationalSample(self.X[mask], self.A[mask], self.Y[mask])
