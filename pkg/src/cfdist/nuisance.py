"""Nuisance models for observational estimation.

Fits the two ingredients of the doubly-robust pseudo-density with K-fold
cross-fitting: a propensity model for P(A=1|X) and, for every grid point
y_m, an outcome regression of the bandwidth-scaled kernel value T(y_m) on
the covariates within each arm.

Estimated propensities are clipped into [EPS_CLIP, 1 - EPS_CLIP] at fit
time and the clip count is recorded. Fixed (user-supplied) propensity
functions are deliberately left unclipped so that genuine positivity
violations surface as errors downstream instead of being truncated away.
Outcome-regression predictions are clamped to the range the target can
attain, +/- sup(K) / h^d, with a clamp counter as a diagnostic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.special import expit

from . import rng
from .data import ObservationalSample
from .density import EPS_CLIP, scaled_kernel_matrix
from .kernels import KernelSpec


class DegenerateArm(Exception):
    """A training fold contains only one treatment arm."""


class SingularDesign(Exception):
    """Collinear design matrix with zero ridge regularization."""


@dataclass(frozen=True)
class CrossFitPlan:
    """Deterministic partition of rows into estimation folds."""

    n_folds: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.n_folds < 2:
            raise ValueError(
                "cross-fitting needs at least 2 folds; nuisances must be "
                "trained on a sample disjoint from the estimation fold"
            )

    def assign(self, n: int) -> np.ndarray:
        """Fold id per row, a seeded near-even partition."""
        if n < self.n_folds:
            raise ValueError(f"cannot split {n} rows into {self.n_folds} folds")
        perm = rng.derive(self.seed, 0xF01D).permutation(n)
        folds = np.empty(n, dtype=np.int64)
        folds[perm] = np.arange(n) % self.n_folds
        return folds


# ---------------------------------------------------------------------------
# regression machinery shared by the models
# ---------------------------------------------------------------------------


def _as_matrix(X) -> np.ndarray:
    """Coerce covariates to an (n, k) array; 1-D input is one covariate."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise ValueError("covariates must be a vector or a 2-D array")
    return X


def _silverman_per_dim(X: np.ndarray) -> np.ndarray:
    m, k = X.shape
    sd = X.std(axis=0, ddof=1) if m > 1 else np.zeros(k)
    factor = (4.0 / ((k + 2) * m)) ** (1.0 / (k + 4))
    b = sd * factor
    b[b <= 0] = 1.0  # constant covariate: all weights equal
    return b


class _NWSmoother:
    """Nadaraya-Watson smoother with a Gaussian product kernel on X.

    One fit serves any number of target columns: the query/train weight
    matrix is formed once per predict call and multiplied into the whole
    target matrix.
    """

    def __init__(self, X: np.ndarray, targets: np.ndarray):
        self.X = X
        self.targets = targets
        self.bandwidths = _silverman_per_dim(X)
        self.fallback = targets.mean(axis=0)

    def predict(self, Xq: np.ndarray) -> np.ndarray:
        out = np.empty((len(Xq), self.targets.shape[1]))
        scaled_train = self.X / self.bandwidths
        scaled_query = Xq / self.bandwidths
        chunk = max(1, 4_000_000 // max(1, len(self.X)))
        for i0 in range(0, len(Xq), chunk):
            blk = scaled_query[i0 : i0 + chunk]
            d2 = (
                (blk * blk).sum(axis=1)[:, None]
                - 2.0 * blk @ scaled_train.T
                + (scaled_train * scaled_train).sum(axis=1)[None, :]
            )
            w = np.exp(-0.5 * np.maximum(d2, 0.0))
            denom = w.sum(axis=1)
            vals = w @ self.targets
            ok = denom > 0
            vals[ok] /= denom[ok, None]
            vals[~ok] = self.fallback
            out[i0 : i0 + chunk] = vals
        return out


class _RidgeRegressor:
    """Linear ridge regression of a target matrix on [1, X]."""

    def __init__(self, X: np.ndarray, targets: np.ndarray, lam: float):
        Z = np.column_stack([np.ones(len(X)), X])
        gram = Z.T @ Z
        if lam > 0:
            penalty = lam * np.eye(Z.shape[1])
            penalty[0, 0] = 0.0  # intercept unpenalized
            gram = gram + penalty
        elif np.linalg.matrix_rank(gram) < Z.shape[1]:
            raise SingularDesign(
                "design matrix is collinear and ridge regularization is zero"
            )
        self.coef = np.linalg.solve(gram, Z.T @ targets)

    def predict(self, Xq: np.ndarray) -> np.ndarray:
        Zq = np.column_stack([np.ones(len(Xq)), Xq])
        return Zq @ self.coef


def _logistic_irls(X: np.ndarray, y: np.ndarray, max_iter: int = 60) -> np.ndarray:
    """Maximum-likelihood logistic coefficients for design [1, X]."""
    Z = np.column_stack([np.ones(len(X)), X])
    beta = np.zeros(Z.shape[1])
    for _ in range(max_iter):
        p = expit(Z @ beta)
        w = p * (1.0 - p)
        grad = Z.T @ (y - p)
        hess = (Z * w[:, None]).T @ Z + 1e-10 * np.eye(Z.shape[1])
        step = np.linalg.solve(hess, grad)
        beta = beta + step
        if np.max(np.abs(step)) < 1e-10:
            break
    return beta


# ---------------------------------------------------------------------------
# fitted nuisances
# ---------------------------------------------------------------------------


@dataclass
class FittedPropensity:
    """Callable x -> pihat_1(x); estimated models are clipped, fixed ones not."""

    predict: Callable[[np.ndarray], np.ndarray]
    model: str
    clip: bool
    clip_count: int = 0

    def __call__(self, X: np.ndarray) -> np.ndarray:
        p = np.asarray(self.predict(_as_matrix(X)), dtype=float)
        if self.clip:
            n_out = int(np.sum((p < EPS_CLIP) | (p > 1.0 - EPS_CLIP)))
            self.clip_count += n_out
            p = np.clip(p, EPS_CLIP, 1.0 - EPS_CLIP)
        return p


@dataclass
class FittedOutcome:
    """Callable (X, a) -> (n, M) predictions, clamped to the target range."""

    predict: Callable[[np.ndarray, int], np.ndarray]
    model: str
    bound: float
    clamp_count: int = 0

    def __call__(self, X: np.ndarray, a: int) -> np.ndarray:
        mu = np.asarray(self.predict(_as_matrix(X), a), dtype=float)
        n_out = int(np.sum(np.abs(mu) > self.bound))
        if n_out:
            self.clamp_count += n_out
            mu = np.clip(mu, -self.bound, self.bound)
        return mu


@dataclass
class NuisanceFit:
    """Propensity and per-grid-point outcome regressions for one fold."""

    propensity: FittedPropensity
    outcome_regression: FittedOutcome
    fold_id: int
    model_kinds: tuple[str, str]

    def diagnostics(self) -> dict:
        return {
            "fold": self.fold_id,
            "propensity_clips": self.propensity.clip_count,
            "outcome_clamps": self.outcome_regression.clamp_count,
        }


PROPENSITY_MODELS = ("logistic", "kernel-smoother")
OUTCOME_MODELS = ("nadaraya-watson", "ridge-linear")


def fit_propensity(
    data: ObservationalSample, model: str | Callable = "logistic"
) -> FittedPropensity:
    """Fit pihat_1(x) = P(A=1|X=x) on a training fold.

    ``model`` is "logistic", "kernel-smoother", or a fixed callable
    X -> probabilities (used for oracles; not clipped).

    Raises
    ------
    DegenerateArm
        If the training fold contains a single arm only.
    """
    if callable(model):
        return FittedPropensity(
            predict=lambda X: np.asarray(model(X), dtype=float).reshape(len(X)),
            model="fixed",
            clip=False,
        )
    if data.n_arm(0) == 0 or data.n_arm(1) == 0:
        raise DegenerateArm("propensity fit needs both arms in the training fold")
    A = data.A.astype(float)
    if model == "logistic":
        beta = _logistic_irls(data.X, A)

        def predict(Xq, beta=beta):
            Z = np.column_stack([np.ones(len(Xq)), Xq])
            return expit(Z @ beta)

        fit = FittedPropensity(predict=predict, model="logistic", clip=True)
        fit.coefficients = beta  # inspectable for calibration checks
        return fit
    if model == "kernel-smoother":
        smoother = _NWSmoother(data.X, A[:, None])

        def predict(Xq, smoother=smoother):
            return smoother.predict(Xq)[:, 0]

        return FittedPropensity(predict=predict, model="kernel-smoother", clip=True)
    raise ValueError(f"unknown propensity model {model!r}")


def fit_outcome_regression(
    data: ObservationalSample,
    grid: np.ndarray,
    h: float,
    spec: KernelSpec,
    model: str | Callable = "nadaraya-watson",
    ridge_lambda: float = 1e-6,
) -> FittedOutcome:
    """Fit muhat_a(x; y_m) = E[T(y_m) | A=a, X=x] for every grid point.

    The regression target for arm ``a`` is the (n_a, M) matrix of
    bandwidth-scaled kernel values of the arm's outcomes against the grid;
    each model fits all M columns in one pass.

    ``model`` may also be a fixed callable (X, a, grid) -> (n, M), used for
    oracle and zero regressions in diagnostics.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValueError("grid is empty")
    bound = spec.sup_value / h**spec.dimension
    if callable(model):
        return FittedOutcome(
            predict=lambda X, a: np.asarray(model(X, a, grid), dtype=float),
            model="fixed",
            bound=bound,
        )
    if data.n_arm(0) == 0 or data.n_arm(1) == 0:
        raise DegenerateArm("outcome regression needs both arms in the training fold")
    per_arm = {}
    for a in (0, 1):
        mask = data.A == a
        targets = scaled_kernel_matrix(spec, data.Y[mask], grid, h).reshape(
            int(mask.sum()), -1
        )
        if model == "nadaraya-watson":
            per_arm[a] = _NWSmoother(data.X[mask], targets)
        elif model == "ridge-linear":
            per_arm[a] = _RidgeRegressor(data.X[mask], targets, ridge_lambda)
        else:
            raise ValueError(f"unknown outcome model {model!r}")
    return FittedOutcome(
        predict=lambda X, a: per_arm[a].predict(X), model=str(model), bound=bound
    )


def fit_scalar_regression(
    X: np.ndarray,
    y: np.ndarray,
    model: str = "nadaraya-watson",
    ridge_lambda: float = 1e-6,
) -> Callable[[np.ndarray], np.ndarray]:
    """Regression of a scalar target on X for the mean-effect baselines."""
    X = _as_matrix(X)
    targets = np.asarray(y, dtype=float).reshape(len(X), 1)
    if model == "nadaraya-watson":
        reg = _NWSmoother(X, targets)
    elif model == "ridge-linear":
        reg = _RidgeRegressor(X, targets, ridge_lambda)
    else:
        raise ValueError(f"unknown outcome model {model!r}")
    return lambda Xq: reg.predict(_as_matrix(Xq))[:, 0]


@dataclass(frozen=True)
class CrossFitResult:
    nuisance: NuisanceFit
    estimation_idx: np.ndarray


def cross_fit(
    data: ObservationalSample,
    plan: CrossFitPlan,
    grid: np.ndarray,
    h: float,
    spec: KernelSpec,
    propensity_model: str | Callable = "logistic",
    outcome_model: str | Callable = "nadaraya-watson",
    ridge_lambda: float = 1e-6,
) -> list[CrossFitResult]:
    """Train nuisances on each fold's complement, paired for estimation.

    Downstream consumers average pseudo-density values over folds with
    weights proportional to fold sizes (equivalently: pool the per-row
    contributions, each row evaluated under its own fold's nuisances).

    Raises
    ------
    DegenerateArm
        If any training complement lacks a treatment arm.
    """
    folds = plan.assign(data.n)
    results = []
    for f in range(plan.n_folds):
        est_idx = np.flatnonzero(folds == f)
        train = data.subset(folds != f)
        if not callable(propensity_model) or not callable(outcome_model):
            if train.n_arm(0) == 0 or train.n_arm(1) == 0:
                raise DegenerateArm(
                    f"training complement of fold {f} contains a single arm"
                )
        fit = NuisanceFit(
            propensity=fit_propensity(train, propensity_model),
            outcome_regression=fit_outcome_regression(
                train, grid, h, spec, outcome_model, ridge_lambda
            ),
            fold_id=f,
            model_kinds=(
                getattr(propensity_model, "__name__", str(propensity_model)),
                getattr(outcome_model, "__name__", str(outcome_model)),
            ),
        )
        results.append(CrossFitResult(nuisance=fit, estimation_idx=est_idx))
    return results
