"""Scikit-learn style front end.

``ResidualRandomizationRegressor`` wraps the pilot fit so the procedure
composes with sklearn tooling (``get_params``/``set_params``, cloning,
pipelines); hypothesis tests and confidence intervals are exposed as
post-fit methods.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from . import group_actions, inference, lasso
from .inference import ConfidenceInterval, Hypothesis, RandomizationResult
from .selection import SelectionConfig


class ResidualRandomizationRegressor(BaseEstimator, RegressorMixin):
    """Sparse pilot regression with randomization-based inference.

    Parameters
    ----------
    pilot : {"sqrt", "lasso"}
        Pilot estimator; "lasso" requires ``lambda1``.
    lambda1 : float or None
        Lasso penalty when ``pilot="lasso"``.
    invariance : {"exchange", "sign", "cluster"}
        Error-invariance family for the randomization distribution.
    clusters : sequence of index sequences or None
        Partition of the observations; required for "cluster".
    n_actions : int
        Number of sampled group actions.
    delta : float
        Bias up-weight in the debiasing-row selection objective.
    standardize : bool
        Scale columns of X to unit sample standard deviation before
        fitting.
    random_state : int or None
        Seed for action sampling.
    """

    def __init__(self, pilot="sqrt", lambda1=None, invariance="exchange",
                 clusters=None, n_actions=1000, delta=10_000.0,
                 standardize=True, random_state=None):
        self.pilot = pilot
        self.lambda1 = lambda1
        self.invariance = invariance
        self.clusters = clusters
        self.n_actions = n_actions
        self.delta = delta
        self.standardize = standardize
        self.random_state = random_state

    def fit(self, X, y):
        X, y = check_X_y(X, y, y_numeric=True)
        n = X.shape[0]
        if n % 2 != 0:
            # group-action families require an even sample size
            X, y = X[:-1], y[:-1]
            n -= 1
        data = lasso.Dataset(X=X, y=y)
        if self.standardize:
            data = lasso.standardize(data)
        if self.pilot == "sqrt":
            fit = lasso.fit_sqrt_lasso(data)
        elif self.pilot == "lasso":
            if self.lambda1 is None:
                raise ValueError("pilot='lasso' requires lambda1")
            fit = lasso.fit_lasso(data, self.lambda1)
        else:
            raise ValueError(f"unknown pilot {self.pilot!r}")
        if self.invariance == "exchange":
            actions = group_actions.sample_exchange(
                n, self.n_actions, self.random_state)
        elif self.invariance == "sign":
            actions = group_actions.sample_sign(
                n, self.n_actions, self.random_state)
        elif self.invariance == "cluster":
            if self.clusters is None:
                raise ValueError("invariance='cluster' requires clusters")
            actions = group_actions.sample_cluster(
                self.clusters, self.n_actions, self.random_state)
        else:
            raise ValueError(f"unknown invariance {self.invariance!r}")
        self.data_ = data
        self.pilot_fit_ = fit
        self.actions_ = actions
        self.coef_ = fit.beta
        self.n_features_in_ = data.p
        self.mean_cross_ = None
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X)
        return X @ self.coef_

    def _selection_config(self):
        return SelectionConfig(delta=self.delta)

    def test(self, a, a0=0.0) -> RandomizationResult:
        """Randomization test of H0: a' beta = a0."""
        check_is_fitted(self, "coef_")
        if self.mean_cross_ is None:
            self.mean_cross_ = group_actions.mean_cross_moment(
                self.data_.X, self.actions_)
        return inference.test(self.data_, Hypothesis(a=np.asarray(a), a0=a0),
                              self.actions_, self._selection_config(),
                              fit=self.pilot_fit_,
                              mean_cross=self.mean_cross_)

    def test_coordinate(self, j, a0=0.0) -> RandomizationResult:
        """Randomization test of H0: beta_j = a0."""
        check_is_fitted(self, "coef_")
        return self.test(Hypothesis.coordinate(j, self.n_features_in_).a, a0)

    def confidence_interval(self, j, level=0.95) -> ConfidenceInterval:
        """Interval for beta_j by inverting the two-sided test."""
        result = self.test_coordinate(j)
        return inference.confidence_interval(
            result.debiased, result.values, 1.0 - level, self.data_.n)
