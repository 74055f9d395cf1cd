"""Selection of the debiasing row along the constraint-level path.

Two rules are provided.  The weighted rule minimizes
delta * |a - S m_lam|_inf + |m_lam|_1 * mean_G |X'GX/n|_inf over the
grid of constraint levels, up-weighting the bias term by delta.  The
tuning-free rule fixes a reference level from a moment bound and, among
grid levels whose exact per-action cost d(lam) does not exceed the
reference value d'(b), picks the one with the smallest bias.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import clime, group_actions
from .clime import DebiasRow, GramMatrix, Infeasible

WEIGHTED = "weighted"
TUNING_FREE = "tuning_free"

DEFAULT_DELTA = 10_000.0


class NoFeasibleRowError(RuntimeError):
    """Every grid point was infeasible for the row program."""


@dataclass(frozen=True)
class SelectionConfig:
    delta: float = DEFAULT_DELTA
    lambda_grid: np.ndarray = field(
        default_factory=lambda: clime.DEFAULT_GRID.copy())
    mode: str = WEIGHTED
    delta1: float | None = None  # tuning-free only; default 8*sqrt(Gamma_hat)

    def __post_init__(self):
        if self.mode not in (WEIGHTED, TUNING_FREE):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == WEIGHTED and self.delta < 1:
            raise ValueError("delta must be >= 1")
        if self.delta1 is not None and self.delta1 <= 0:
            raise ValueError("delta1 must be positive")


@dataclass(frozen=True)
class SelectionResult:
    lambda_star: float
    row: DebiasRow
    objective: float
    bound_terms: tuple[float, float]  # (bias term, cost term)
    fallback: bool = False  # tuning-free: no grid point passed the filter


def objective(row: DebiasRow, mean_cross: float, delta: float) -> float:
    """delta * |a - S m|_inf + |m|_1 * mean_G |X'GX/n|_inf."""
    value = delta * row.gap + row.l1 * mean_cross
    if not math.isfinite(value):
        raise ValueError("non-finite objective inputs")
    return value


def select(gram: GramMatrix, a: np.ndarray, X: np.ndarray,
           actions: group_actions.GroupActionSet, cfg: SelectionConfig,
           *, mean_cross: float | None = None,
           path: tuple[list[DebiasRow], np.ndarray] | None = None,
           ) -> SelectionResult:
    """Pick the grid point minimizing the weighted objective.

    Ties are broken toward larger lambda (smaller |m|_1).  mean_cross
    and the solved path may be passed in when shared across calls.
    """
    rows, lams = path if path is not None else clime.solve_path(
        gram, a, cfg.lambda_grid)
    if not rows:
        raise NoFeasibleRowError("no feasible debiasing row on the grid")
    if mean_cross is None:
        mean_cross = group_actions.mean_cross_moment(X, actions)

    best_idx, best_obj = 0, math.inf
    for i, row in enumerate(rows):
        obj = objective(row, mean_cross, cfg.delta)
        if obj < best_obj:  # strict: first (largest-lambda) winner kept
            best_idx, best_obj = i, obj
    row = rows[best_idx]
    return SelectionResult(lambda_star=float(lams[best_idx]), row=row,
                           objective=best_obj,
                           bound_terms=(row.gap, row.l1 * mean_cross))


def exact_cost(row: DebiasRow, X: np.ndarray,
               actions: group_actions.GroupActionSet) -> float:
    """(1/|G|) sum_G |m' X'GX / n|_inf, evaluated per action."""
    n = X.shape[0]
    w = X @ row.m
    # m'X'GX = (Xm)'(GX); for the pair-swap involutions sampled here
    # (Xm)'G = G(Xm), so one stacked product covers all actions
    wg = group_actions.transformed_matrix(actions, w)
    vals = np.abs(wg @ X).max(axis=1) / n
    return float(vals.mean())


def dvalue(row: DebiasRow, X: np.ndarray,
           actions: group_actions.GroupActionSet) -> float:
    """d(lam) = bias + exact per-action cost at this row."""
    return row.gap + exact_cost(row, X, actions)


def default_delta1(X: np.ndarray) -> float:
    """8 * sqrt(Gamma_hat) with the plug-in second-moment estimate.

    Gamma_hat = max_{u,v} (1/n) sum_i (X_iu X_iv)^2; the population
    terms involving the inverse covariance are not estimable here.
    """
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    sq = X ** 2
    gamma_hat = float(np.max(sq.T @ sq) / n)
    return 8.0 * math.sqrt(gamma_hat)


def select_tuning_free(gram: GramMatrix, a: np.ndarray, X: np.ndarray,
                       actions: group_actions.GroupActionSet,
                       cfg: SelectionConfig,
                       *, mean_cross: float | None = None,
                       ) -> SelectionResult:
    """Bias-minimizing selection under the reference-bound filter."""
    n, p = X.shape
    delta1 = cfg.delta1 if cfg.delta1 is not None else default_delta1(X)
    b = delta1 * math.sqrt((math.log(p * n) + 2.0 * math.log(p)) / n)
    if b >= 1.0:
        raise ValueError(
            f"reference level {b:.4f} >= 1; decrease delta1 or increase n")
    ref_row = clime.solve_row(gram, a, b)
    if isinstance(ref_row, Infeasible):
        raise NoFeasibleRowError(
            f"row program infeasible at the reference level {b:.4f}")
    if mean_cross is None:
        mean_cross = group_actions.mean_cross_moment(X, actions)
    d_ref = ref_row.gap + ref_row.l1 * mean_cross  # d'(b)

    rows, lams = clime.solve_path(gram, a, cfg.lambda_grid)
    best = None
    for lam, row in zip(lams, rows):
        if dvalue(row, X, actions) <= d_ref and (
                best is None or row.gap < best[1].gap):
            best = (lam, row)
    if best is None:
        return SelectionResult(lambda_star=float(b), row=ref_row,
                               objective=dvalue(ref_row, X, actions),
                               bound_terms=(ref_row.gap,
                                            ref_row.l1 * mean_cross),
                               fallback=True)
    lam, row = best
    return SelectionResult(lambda_star=float(lam), row=row,
                           objective=dvalue(row, X, actions),
                           bound_terms=(row.gap, row.l1 * mean_cross))
