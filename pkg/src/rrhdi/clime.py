"""Constrained l1-minimization for the debiasing row.

Solves min |m|_1 subject to |a - S m|_inf <= lambda for the sample Gram
matrix S = X'X/n.  Only the action of the debiasing matrix on the
contrast vector a is ever consumed downstream, so the p x p matrix
problem is reduced to this p-vector linear program and solved in the
split-variable standard form min 1'(m+ + m-) s.t. -lam <= a - S(m+ - m-)
<= lam, m+/- >= 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

GAP_TOL = 1e-8

#: default geometric grid for the solution path
DEFAULT_GRID = np.geomspace(1.0, 0.01, 50)

_LP_OPTIONS = {
    "primal_feasibility_tolerance": 1e-10,
    "dual_feasibility_tolerance": 1e-10,
}


@dataclass(frozen=True)
class GramMatrix:
    """Sample Gram matrix S = X'X/n."""

    S: np.ndarray

    def __post_init__(self):
        S = np.asarray(self.S, dtype=float)
        object.__setattr__(self, "S", S)
        if S.ndim != 2 or S.shape[0] != S.shape[1]:
            raise ValueError("S must be square")
        if not np.allclose(S, S.T, atol=1e-12):
            raise ValueError("S must be symmetric to 1e-12")
        if np.any(np.diag(S) < 0):
            raise ValueError("S must have a nonnegative diagonal")

    @property
    def p(self) -> int:
        return self.S.shape[0]

    @classmethod
    def from_design(cls, X: np.ndarray) -> "GramMatrix":
        X = np.asarray(X, dtype=float)
        S = X.T @ X / X.shape[0]
        return cls(S=(S + S.T) / 2.0)


@dataclass(frozen=True)
class DebiasRow:
    """Debiasing vector m with its constraint level and certificates."""

    m: np.ndarray
    lam: float
    gap: float  # achieved |a - S m|_inf
    l1: float   # |m|_1


@dataclass(frozen=True)
class Infeasible:
    """Marker returned when no m satisfies |a - S m|_inf <= lambda."""

    lam: float


class LPSolverError(RuntimeError):
    """The LP backend failed for a reason other than infeasibility."""


def _make_row(m: np.ndarray, S: np.ndarray, a: np.ndarray,
              lam: float) -> DebiasRow:
    gap = float(np.max(np.abs(a - S @ m)))
    return DebiasRow(m=m, lam=float(lam), gap=gap,
                     l1=float(np.abs(m).sum()))


def solve_row(gram: GramMatrix, a: np.ndarray,
              lam: float) -> DebiasRow | Infeasible:
    """Solve min |m|_1 s.t. |a - S m|_inf <= lam.

    Returns a DebiasRow on success or an Infeasible marker when the
    constraint set is empty (possible for singular S and small lam).
    """
    a = np.asarray(a, dtype=float)
    S = gram.S
    p = gram.p
    if a.shape != (p,):
        raise ValueError(f"a must have length {p}")
    if np.abs(a).sum() == 0.0:
        raise ValueError("contrast vector a must be nonzero")
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    if lam >= np.max(np.abs(a)):
        return _make_row(np.zeros(p), S, a, lam)

    c = np.ones(2 * p)
    A_ub = np.block([[S, -S], [-S, S]])
    b_ub = np.concatenate([a + lam, lam - a])
    # Settle feasibility first with a phase-1 program that minimizes the
    # worst constraint violation t over (m+, m-, t).  This is orders of
    # magnitude faster than letting the main solve discover an empty
    # constraint set, and it resolves the undecided status HiGHS can
    # return near the feasibility boundary.
    c1 = np.zeros(2 * p + 1)
    c1[-1] = 1.0
    A1 = np.hstack([A_ub, -np.ones((2 * p, 1))])
    phase1 = linprog(c1, A_ub=A1, b_ub=b_ub, method="highs")
    if phase1.status == 0 and phase1.fun > GAP_TOL:
        return Infeasible(lam=float(lam))
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, method="highs",
                  options=_LP_OPTIONS)
    if res.status == 4:
        res = linprog(c, A_ub=A_ub, b_ub=b_ub, method="highs")
    if res.status == 2:
        return Infeasible(lam=float(lam))
    if res.status != 0:
        raise LPSolverError(
            f"LP solver failed at lambda={lam}: status {res.status} "
            f"({res.message})")
    m = res.x[:p] - res.x[p:]
    return _make_row(m, S, a, lam)


def solve_path(gram: GramMatrix, a: np.ndarray,
               lambda_grid: np.ndarray) -> tuple[list[DebiasRow], np.ndarray]:
    """Solve the row program along a descending grid of lambda values.

    Returns (rows, lambdas) for the feasible prefix of the grid; the
    path stops at the first infeasible grid point.
    """
    grid = np.asarray(lambda_grid, dtype=float)
    if grid.size == 0:
        raise ValueError("lambda grid must be non-empty")
    if np.any(np.diff(grid) >= 0):
        raise ValueError("lambda grid must be strictly descending")
    if np.any((grid <= 0) | (grid > 1)):
        raise ValueError("lambda grid values must lie in (0, 1]")

    rows: list[DebiasRow] = []
    used: list[float] = []
    for lam in grid:
        result = solve_row(gram, a, lam)
        if isinstance(result, Infeasible):
            break
        rows.append(result)
        used.append(lam)
    return rows, np.array(used)
