"""Sparse linear regression solvers.

Provides the l1-penalized least squares (Lasso) solver by cyclic
coordinate descent on the Gram matrix, the square-root Lasso with its
pivotal penalty, and the finite-sample residual rescaling applied
before residuals enter a randomization distribution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

KKT_TOL = 1e-6
CD_TOL = 1e-9
CD_MAX_SWEEPS = 10_000
SQRT_LASSO_CONST = 1.1
SIGMA_TOL = 1e-8


class ConvergenceError(RuntimeError):
    """Solver failed to converge; carries the final KKT violation."""

    def __init__(self, message: str, kkt_violation: float):
        super().__init__(message)
        self.kkt_violation = kkt_violation


class DegenerateFitError(ValueError):
    """Fit cannot be used downstream (zero residuals or full support)."""


@dataclass(frozen=True)
class Dataset:
    """Design matrix X (n x p) and response y (n)."""

    X: np.ndarray
    y: np.ndarray
    standardized: bool = False

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=float)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        if X.ndim != 2:
            raise ValueError("X must be a 2-d matrix")
        n, p = X.shape
        if n < 2 or p < 1:
            raise ValueError(f"need n >= 2 and p >= 1, got n={n}, p={p}")
        if y.shape != (n,):
            raise ValueError(f"y must have length {n}, got shape {y.shape}")
        if not (np.isfinite(X).all() and np.isfinite(y).all()):
            raise ValueError("non-finite entries in X or y")
        if self.standardized:
            sd = X.std(axis=0, ddof=1)
            # constant columns cannot be rescaled and stay as-is
            if np.any((np.abs(sd - 1.0) > 1e-8) & (sd != 0.0)):
                raise ValueError("standardized flag set but columns do not "
                                 "have unit sample standard deviation")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]


def standardize(data: Dataset) -> Dataset:
    """Scale columns of X to unit sample standard deviation (ddof=1).

    Constant columns are left untouched.
    """
    sd = data.X.std(axis=0, ddof=1)
    sd = np.where(sd > 0, sd, 1.0)
    return Dataset(X=data.X / sd, y=data.y, standardized=True)


@dataclass(frozen=True)
class LassoFit:
    """Solution of a (square-root) Lasso problem plus its residuals."""

    beta: np.ndarray
    lambda1: float
    residuals: np.ndarray
    support_size: int
    corrected: bool = False
    degenerate: bool = False


def _cd_solve(gram: np.ndarray, xty: np.ndarray, lam: float,
              beta0: np.ndarray | None = None) -> tuple[np.ndarray, float]:
    """Cyclic coordinate descent on the Gram formulation.

    Minimizes (1/2n)|y - Xb|_2^2 + lam |b|_1 given gram = X'X/n and
    xty = X'y/n.  Returns (beta, kkt_violation).
    """
    p = gram.shape[0]
    beta = np.zeros(p) if beta0 is None else beta0.copy()
    grad = xty - gram @ beta  # X'(y - Xb)/n
    diag = np.diag(gram).copy()
    usable = diag > 0.0
    # Sweep only over coordinates that can move (nonzero or with a
    # gradient beyond the threshold); after the restricted problem
    # converges, rescan the full gradient and pull in any violators.
    in_active = ((beta != 0.0) | (np.abs(grad) > lam)) & usable
    active = np.flatnonzero(in_active)
    sweeps = 0
    while sweeps < CD_MAX_SWEEPS:
        converged = False
        while sweeps < CD_MAX_SWEEPS:
            sweeps += 1
            max_change = 0.0
            for j in active:
                rho = grad[j] + diag[j] * beta[j]
                new = math.copysign(max(abs(rho) - lam, 0.0), rho) / diag[j]
                delta = new - beta[j]
                if delta != 0.0:
                    grad -= gram[:, j] * delta
                    beta[j] = new
                    max_change = max(max_change, abs(delta))
            if max_change < CD_TOL:
                converged = True
                break
        # recompute the gradient to discard incremental-update drift
        grad = xty - gram @ beta
        violators = usable & ~in_active & (np.abs(grad) > lam)
        if converged and not violators.any():
            break
        in_active |= violators
        active = np.flatnonzero(in_active)
    viol = _kkt_violation(beta, grad, lam)
    return beta, viol


def _kkt_violation(beta: np.ndarray, grad: np.ndarray, lam: float) -> float:
    """Max violation of the Lasso stationarity conditions.

    grad is X'(y - Xb)/n.  Off support: |grad_j| <= lam.  On support:
    grad_j = lam * sign(beta_j).
    """
    off = np.maximum(np.abs(grad) - lam, 0.0)
    on = np.abs(grad - lam * np.sign(beta))
    return float(np.max(np.where(beta != 0.0, on, off), initial=0.0))


def fit_lasso(data: Dataset, lambda1: float, *,
              beta0: np.ndarray | None = None) -> LassoFit:
    """Solve min_b (1/2n)|y - Xb|_2^2 + lambda1 |b|_1 by coordinate descent.

    The returned fit certifiably satisfies the KKT conditions at
    tolerance ``KKT_TOL``; otherwise a ConvergenceError is raised.
    """
    if lambda1 < 0:
        raise ValueError("lambda1 must be nonnegative")
    n = data.n
    gram = data.X.T @ data.X / n
    xty = data.X.T @ data.y / n
    beta, viol = _cd_solve(gram, xty, lambda1, beta0)
    if viol > KKT_TOL:
        raise ConvergenceError(
            f"coordinate descent did not reach KKT tolerance: "
            f"violation {viol:.3e} > {KKT_TOL:.0e}", viol)
    residuals = data.y - data.X @ beta
    return LassoFit(beta=beta, lambda1=float(lambda1), residuals=residuals,
                    support_size=int(np.count_nonzero(beta)))


def fit_sqrt_lasso(data: Dataset, *, const: float = SQRT_LASSO_CONST,
                   max_iter: int = 100) -> LassoFit:
    """Solve min_b |y - Xb|_2/sqrt(n) + lam_sq |b|_1.

    Uses the universal pivotal penalty lam_sq = const * sqrt(2 log p / n)
    and alternates coefficient updates (a Lasso solve at penalty
    lam_sq * sigma_hat) with scale updates sigma_hat = |y - Xb|_2/sqrt(n)
    until the scale stabilizes.  ``fit.lambda1`` records the equivalent
    Lasso-scale penalty lam_sq * sigma_hat.
    """
    n, p = data.n, data.p
    lam_sq = const * math.sqrt(2.0 * math.log(p) / n)
    gram = data.X.T @ data.X / n
    xty = data.X.T @ data.y / n
    yty = float(data.y @ data.y) / n

    sigma = math.sqrt(max(yty, 0.0))
    if sigma == 0.0:
        # zero response: beta = 0, zero residuals
        return LassoFit(beta=np.zeros(p), lambda1=0.0,
                        residuals=np.zeros(n), support_size=0,
                        degenerate=True)
    beta = np.zeros(p)
    for _ in range(max_iter):
        beta, viol = _cd_solve(gram, xty, lam_sq * sigma, beta)
        if viol > KKT_TOL * max(sigma, 1.0):
            raise ConvergenceError(
                f"square-root Lasso inner solve did not converge "
                f"(violation {viol:.3e})", viol)
        rss = yty - 2.0 * beta @ xty + beta @ gram @ beta
        new_sigma = math.sqrt(max(rss, 0.0))
        if abs(new_sigma - sigma) < SIGMA_TOL:
            sigma = new_sigma
            break
        sigma = new_sigma
    residuals = data.y - data.X @ beta
    degenerate = sigma < SIGMA_TOL
    return LassoFit(beta=beta, lambda1=float(lam_sq * sigma),
                    residuals=residuals,
                    support_size=int(np.count_nonzero(beta)),
                    degenerate=degenerate)


def sqrt_lasso_objective(data: Dataset, beta: np.ndarray,
                         const: float = SQRT_LASSO_CONST) -> float:
    """Square-root Lasso objective value at beta."""
    lam_sq = const * math.sqrt(2.0 * math.log(data.p) / data.n)
    resid = data.y - data.X @ beta
    return float(np.linalg.norm(resid) / math.sqrt(data.n)
                 + lam_sq * np.abs(beta).sum())


def correct_residuals(fit: LassoFit, n: int) -> LassoFit:
    """Rescale residuals by sqrt(n / (n - support_size)).

    Finite-sample correction applied before residuals enter the
    randomization distribution.
    """
    if fit.support_size >= n:
        raise DegenerateFitError("degenerate fit: full support")
    factor = math.sqrt(n / (n - fit.support_size))
    return replace(fit, residuals=fit.residuals * factor, corrected=True)
