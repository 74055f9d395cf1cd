"""Randomization test and confidence interval for a linear contrast.

Pipeline: pilot Lasso fit -> residual correction -> debiasing-row
selection -> debiased estimate and test statistic -> attainable
randomization distribution -> p-value; the test inverts into a
confidence interval through empirical quantiles of the attainable
distribution.

Conventions (pinned so that the interval and the two-sided test are
exactly dual):

* one-sided p-value: #{values >= t_obs} / |G|.
* two-sided p-value: min(1, 2 * min(#{values <= t_obs},
  #{values >= t_obs}) / |G|), the equal-tailed doubling.
* quantiles: with N = |values| and k = floor(N * pi0 / 2), the lower
  quantile is the (k+1)-th order statistic and the upper quantile the
  (N-k)-th.  Then a0 lies in the closed interval iff the two-sided
  p-value exceeds pi0, with no exceptions (ties included).
* pi0 = 0 yields the whole real line.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import group_actions, lasso, selection
from .clime import DebiasRow, GramMatrix
from .lasso import Dataset, DegenerateFitError, LassoFit
from .selection import SelectionConfig, SelectionResult


class StageError(RuntimeError):
    """Pipeline failure wrapper naming the stage that failed."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass(frozen=True)
class Hypothesis:
    """H0: a' beta = a0."""

    a: np.ndarray
    a0: float = 0.0

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        object.__setattr__(self, "a", a)
        if np.abs(a).sum() == 0.0:
            raise ValueError("contrast vector a must be nonzero")

    @classmethod
    def coordinate(cls, j: int, p: int, a0: float = 0.0) -> "Hypothesis":
        a = np.zeros(p)
        a[j] = 1.0
        return cls(a=a, a0=a0)


@dataclass(frozen=True)
class RandomizationResult:
    t_obs: float
    values: np.ndarray
    p_one_sided: float
    p_two_sided: float
    debiased: float
    selection: SelectionResult | None = None


@dataclass(frozen=True)
class ConfidenceInterval:
    lower: float
    upper: float
    level: float  # confidence level 1 - pi0
    quantiles: tuple[float, float]

    @property
    def length(self) -> float:
        return self.upper - self.lower

    def contains(self, value: float) -> bool:
        return self.lower <= value <= self.upper


def debiased_estimate(fit: LassoFit, row: DebiasRow, data: Dataset,
                      a: np.ndarray) -> float:
    """a' beta_hat + m' X'(y - X beta_hat)/n with raw residuals.

    The finite-sample residual rescaling applies only to the
    randomization distribution, never to the point estimate.
    """
    a = np.asarray(a, dtype=float)
    if a.shape != (data.p,) or row.m.shape != (data.p,):
        raise ValueError("dimension mismatch between contrast, row and data")
    raw = data.y - data.X @ fit.beta
    return float(a @ fit.beta + row.m @ (data.X.T @ raw) / data.n)


def attainable_values(row: DebiasRow, fit: LassoFit, X: np.ndarray,
                      actions: group_actions.GroupActionSet) -> np.ndarray:
    """m' X' (G eps_hat) / sqrt(n) for every sampled action."""
    if fit.degenerate:
        raise DegenerateFitError(
            "degenerate fit: residuals unusable for randomization")
    n = X.shape[0]
    w = X @ row.m
    transformed = group_actions.transformed_matrix(actions, fit.residuals)
    return transformed @ w / math.sqrt(n)


def pvalue(t_obs: float, values: np.ndarray) -> tuple[float, float]:
    """One-sided and equal-tailed two-sided randomization p-values."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("values must be non-empty")
    count = values.size
    n_ge = int(np.count_nonzero(values >= t_obs))
    n_le = int(np.count_nonzero(values <= t_obs))
    p_one = n_ge / count
    p_two = min(1.0, 2.0 * min(n_ge, n_le) / count)
    return p_one, p_two


def confidence_interval(debiased: float, values: np.ndarray, pi0: float,
                        n: int) -> ConfidenceInterval:
    """Invert the two-sided test into an interval for a' beta."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("values must be non-empty")
    if not 0.0 <= pi0 < 1.0:
        raise ValueError("pi0 must lie in [0, 1)")
    if pi0 == 0.0:
        return ConfidenceInterval(lower=-math.inf, upper=math.inf,
                                  level=1.0,
                                  quantiles=(-math.inf, math.inf))
    if values.size < 2.0 / pi0:
        warnings.warn(
            f"only {values.size} randomization values for pi0={pi0}; "
            "quantiles are unstable", stacklevel=2)
    sorted_vals = np.sort(values)
    count = values.size
    k = int(math.floor(count * pi0 / 2.0))
    tau_lo = float(sorted_vals[k])           # (k+1)-th order statistic
    tau_hi = float(sorted_vals[count - k - 1])  # (N-k)-th order statistic
    sqrt_n = math.sqrt(n)
    return ConfidenceInterval(lower=debiased - tau_hi / sqrt_n,
                              upper=debiased - tau_lo / sqrt_n,
                              level=1.0 - pi0,
                              quantiles=(tau_lo, tau_hi))


def _fit_pilot(data: Dataset, lasso_cfg: dict | None) -> LassoFit:
    cfg = dict(lasso_cfg or {})
    method = cfg.pop("method", "sqrt")
    if method == "sqrt":
        return lasso.fit_sqrt_lasso(data, **cfg)
    if method == "lasso":
        return lasso.fit_lasso(data, cfg.pop("lambda1"), **cfg)
    raise ValueError(f"unknown pilot method {method!r}")


def test(data: Dataset, hypothesis: Hypothesis,
         actions: group_actions.GroupActionSet,
         selection_cfg: SelectionConfig | None = None,
         lasso_cfg: dict | None = None,
         *, fit: LassoFit | None = None,
         mean_cross: float | None = None) -> RandomizationResult:
    """Full randomization test of H0: a' beta = a0.

    A pre-computed pilot fit and cross-moment mean may be supplied when
    testing several contrasts on the same dataset.
    """
    cfg = selection_cfg or SelectionConfig()
    try:
        if fit is None:
            fit = _fit_pilot(data, lasso_cfg)
    except Exception as exc:  # noqa: BLE001 - stage labelling
        raise StageError("pilot fit", exc) from exc
    try:
        corrected = lasso.correct_residuals(fit, data.n)
    except Exception as exc:
        raise StageError("residual correction", exc) from exc
    try:
        gram = GramMatrix.from_design(data.X)
        if cfg.mode == selection.TUNING_FREE:
            sel = selection.select_tuning_free(
                gram, hypothesis.a, data.X, actions, cfg,
                mean_cross=mean_cross)
        else:
            sel = selection.select(gram, hypothesis.a, data.X, actions, cfg,
                                   mean_cross=mean_cross)
    except Exception as exc:
        raise StageError("row selection", exc) from exc
    try:
        debiased = debiased_estimate(fit, sel.row, data, hypothesis.a)
        t_obs = math.sqrt(data.n) * (debiased - hypothesis.a0)
        values = attainable_values(sel.row, corrected, data.X, actions)
        if np.ptp(values) == 0.0:
            warnings.warn("attainable randomization distribution is a "
                          "point mass; the p-value is uninformative",
                          stacklevel=2)
        p_one, p_two = pvalue(t_obs, values)
    except Exception as exc:
        raise StageError("randomization", exc) from exc
    return RandomizationResult(t_obs=t_obs, values=values,
                               p_one_sided=p_one, p_two_sided=p_two,
                               debiased=debiased, selection=sel)
