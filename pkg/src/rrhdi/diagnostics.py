"""Oracle-side diagnostics for synthetic data with known truth.

Computes the infeasible randomization distribution built from the true
errors, the transport-distance bound relating it to the attainable
distribution, and the exact Wasserstein-1 distance between the two
equal-size empirical distributions.  The bound uses the same sampled
action set for both distributions (the identity coupling).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import group_actions
from .clime import DebiasRow
from .lasso import Dataset, LassoFit


@dataclass(frozen=True)
class OracleContext:
    """True generative quantities, available only in simulation."""

    beta_true: np.ndarray
    eps_true: np.ndarray
    sigma_true: np.ndarray | None = None
    sigma_inv_true: np.ndarray | None = None

    def validate(self, data: Dataset) -> None:
        recon = data.X @ self.beta_true + self.eps_true
        if np.max(np.abs(recon - data.y)) > 1e-10:
            raise ValueError("context does not reproduce the response")


def oracle_values(ctx: OracleContext, fit: LassoFit, row: DebiasRow,
                  X: np.ndarray, actions: group_actions.GroupActionSet,
                  a: np.ndarray) -> np.ndarray:
    """sqrt(n) a'(I - MS)(beta_hat - beta) + m' X'(G eps)/sqrt(n)."""
    n = X.shape[0]
    S = X.T @ X / n
    diff = fit.beta - ctx.beta_true
    bias = math.sqrt(n) * float(a @ diff - row.m @ (S @ diff))
    w = X @ row.m
    transformed = group_actions.transformed_matrix(actions, ctx.eps_true)
    return bias + transformed @ w / math.sqrt(n)


def raw_attainable_values(row: DebiasRow, fit: LassoFit, X: np.ndarray,
                          actions: group_actions.GroupActionSet
                          ) -> np.ndarray:
    """Attainable values from uncorrected residuals.

    The transport bound couples oracle and attainable values through
    the plain residuals y - X beta_hat, so the finite-sample rescaling
    must be left out on this path.
    """
    n = X.shape[0]
    w = X @ row.m
    raw = fit.residuals if not fit.corrected else None
    if raw is None:
        raise ValueError("diagnostics require uncorrected residuals")
    transformed = group_actions.transformed_matrix(actions, raw)
    return transformed @ w / math.sqrt(n)


def wasserstein1(u: np.ndarray, v: np.ndarray) -> float:
    """Exact W1 between equal-size empirical distributions."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.size != v.size or u.size == 0:
        raise ValueError("samples must be non-empty and of equal size")
    return float(np.mean(np.abs(np.sort(u) - np.sort(v))))


def transport_bound(fit: LassoFit, ctx: OracleContext, row: DebiasRow,
                X: np.ndarray, actions: group_actions.GroupActionSet,
                *, mean_cross: float | None = None) -> float:
    """|beta_hat - beta|_1 * (sqrt(n)*bias + |m|_1 * mean|X'GX/sqrt(n)|).

    Upper bound on the W1 distance between the oracle and attainable
    distributions under the shared-action coupling.
    """
    n = X.shape[0]
    if mean_cross is None:
        mean_cross = group_actions.mean_cross_moment(X, actions)
    est_err = float(np.abs(fit.beta - ctx.beta_true).sum())
    return est_err * math.sqrt(n) * (row.gap + row.l1 * mean_cross)
