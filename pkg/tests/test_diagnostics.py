import itertools
import math

import numpy as np
import pytest

from rrhdi import diagnostics, group_actions, lasso
from rrhdi.clime import DebiasRow, GramMatrix, solve_row
from rrhdi.diagnostics import (OracleContext, transport_bound, oracle_values,
                               raw_attainable_values, wasserstein1)
from rrhdi.lasso import Dataset, LassoFit


def make_instance(seed, n=30, p=10, s=3, noise=1.0):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, p))
    X = X / X.std(axis=0, ddof=1)
    beta = np.zeros(p)
    beta[:s] = rng.choice([-1.0, 1.0], size=s)
    eps = noise * rng.standard_normal(n)
    data = Dataset(X=X, y=X @ beta + eps, standardized=True)
    ctx = OracleContext(beta_true=beta, eps_true=eps)
    actions = group_actions.sample_exchange(n, 80, seed=seed)
    return data, ctx, actions


def fitted_row(data, lam=0.3, j=0):
    gram = GramMatrix.from_design(data.X)
    a = np.zeros(data.p)
    a[j] = 1.0
    return solve_row(gram, a, lam), a


class TestOracleContext:
    def test_validate_accepts_consistent(self):
        data, ctx, _ = make_instance(0)
        ctx.validate(data)  # no raise

    def test_validate_rejects_inconsistent(self):
        data, ctx, _ = make_instance(1)
        bad = OracleContext(beta_true=ctx.beta_true,
                            eps_true=ctx.eps_true + 0.01)
        with pytest.raises(ValueError, match="reproduce"):
            bad.validate(data)


class TestOracleValues:
    def test_coincides_with_attainable_when_fit_exact(self):
        # beta_hat = beta makes residuals = eps, and the bias term
        # vanishes, so the two distributions coincide pointwise
        data, ctx, actions = make_instance(2)
        fit = LassoFit(beta=ctx.beta_true, lambda1=0.0,
                       residuals=ctx.eps_true,
                       support_size=int(np.count_nonzero(ctx.beta_true)))
        row, a = fitted_row(data)
        o = oracle_values(ctx, fit, row, data.X, actions, a)
        t = raw_attainable_values(row, fit, data.X, actions)
        assert np.max(np.abs(o - t)) < 1e-10

    def test_zero_row_constant_bias(self):
        data, ctx, actions = make_instance(3)
        fit = lasso.fit_lasso(data, 0.2)
        row = DebiasRow(m=np.zeros(data.p), lam=1.0, gap=1.0, l1=0.0)
        a = np.zeros(data.p)
        a[0] = 1.0
        vals = oracle_values(ctx, fit, row, data.X, actions, a)
        expect = math.sqrt(data.n) * (fit.beta[0] - ctx.beta_true[0])
        assert np.allclose(vals, expect, atol=1e-12)

    def test_matches_dense_matrix_evaluation(self):
        data, ctx, actions = make_instance(4)
        fit = lasso.fit_lasso(data, 0.2)
        row, a = fitted_row(data)
        vals = oracle_values(ctx, fit, row, data.X, actions, a)
        n = data.n
        S = data.X.T @ data.X / n
        for i, g in enumerate(actions.actions):
            bias = math.sqrt(n) * (a - S @ row.m) @ (fit.beta - ctx.beta_true)
            stoch = row.m @ data.X.T @ group_actions.apply(
                g, ctx.eps_true) / math.sqrt(n)
            assert vals[i] == pytest.approx(bias + stoch, abs=1e-12)


class TestRawAttainableValues:
    def test_rejects_corrected_residuals(self):
        data, ctx, actions = make_instance(5)
        fit = lasso.correct_residuals(lasso.fit_lasso(data, 0.2), data.n)
        row, _ = fitted_row(data)
        with pytest.raises(ValueError, match="uncorrected"):
            raw_attainable_values(row, fit, data.X, actions)

    def test_matches_dense(self):
        data, ctx, actions = make_instance(6)
        fit = lasso.fit_lasso(data, 0.2)
        row, _ = fitted_row(data)
        vals = raw_attainable_values(row, fit, data.X, actions)
        for i, g in enumerate(actions.actions):
            dense = row.m @ data.X.T @ group_actions.apply(
                g, fit.residuals) / math.sqrt(data.n)
            assert vals[i] == pytest.approx(dense, abs=1e-12)


class TestWasserstein1:
    def test_identical_samples_zero(self):
        u = np.array([3.0, -1.0, 2.0])
        assert wasserstein1(u, u.copy()) == 0.0

    def test_constant_shift(self):
        assert wasserstein1(np.zeros(2), np.ones(2)) == 1.0

    def test_sort_invariance(self):
        rng = np.random.default_rng(7)
        u = rng.standard_normal(9)
        v = rng.standard_normal(9)
        assert wasserstein1(u, v) == wasserstein1(
            rng.permutation(u), rng.permutation(v))

    def test_matches_assignment_oracle(self):
        # W1 between equal-size empiricals is the optimal assignment
        # cost; brute force over all permutations for N <= 7
        rng = np.random.default_rng(8)
        for N in (2, 4, 7):
            u = rng.standard_normal(N)
            v = rng.standard_normal(N)
            best = min(
                np.mean(np.abs(u - v[list(perm)]))
                for perm in itertools.permutations(range(N)))
            assert wasserstein1(u, v) == pytest.approx(best, abs=1e-12)

    def test_size_mismatch_rejected(self):
        with pytest.raises(ValueError):
            wasserstein1(np.ones(3), np.ones(4))
        with pytest.raises(ValueError):
            wasserstein1(np.array([]), np.array([]))


class TestTransportBound:
    def test_zero_when_fit_exact(self):
        data, ctx, actions = make_instance(9)
        fit = LassoFit(beta=ctx.beta_true, lambda1=0.0,
                       residuals=ctx.eps_true, support_size=3)
        row, _ = fitted_row(data)
        assert transport_bound(fit, ctx, row, data.X, actions) == 0.0

    def test_zero_row_plugin_form(self):
        data, ctx, actions = make_instance(10)
        fit = lasso.fit_lasso(data, 0.2)
        a = np.zeros(data.p)
        a[0] = 1.0
        row = DebiasRow(m=np.zeros(data.p), lam=1.0,
                        gap=float(np.max(np.abs(a))), l1=0.0)
        expect = float(np.abs(fit.beta - ctx.beta_true).sum()) \
            * math.sqrt(data.n) * np.max(np.abs(a))
        assert transport_bound(fit, ctx, row, data.X, actions) == pytest.approx(
            expect, rel=1e-12)

    def test_dominates_w1_on_random_instances(self):
        # the coupled-action transport bound; checked over instances
        # with varying noise levels and sizes
        for seed in range(25):
            data, ctx, actions = make_instance(
                seed, n=30 + 10 * (seed % 3), p=10 + 5 * (seed % 2),
                noise=(0.5, 1.0, 2.0)[seed % 3])
            fit = lasso.fit_sqrt_lasso(data)
            row, a = fitted_row(data)
            o = oracle_values(ctx, fit, row, data.X, actions, a)
            t = raw_attainable_values(row, fit, data.X, actions)
            w1 = wasserstein1(o, t)
            bound = transport_bound(fit, ctx, row, data.X, actions)
            assert w1 <= bound + 1e-12, (seed, w1, bound)

    def test_accepts_precomputed_mean_cross(self):
        data, ctx, actions = make_instance(11)
        fit = lasso.fit_lasso(data, 0.2)
        row, _ = fitted_row(data)
        mc = group_actions.mean_cross_moment(data.X, actions)
        assert transport_bound(fit, ctx, row, data.X, actions,
                           mean_cross=mc) == pytest.approx(
            transport_bound(fit, ctx, row, data.X, actions), rel=1e-12)
