"""Residual-randomization inference for high-dimensional linear models."""

from .clime import (DebiasRow, GramMatrix, Infeasible, LPSolverError,
                    solve_path, solve_row)
from .diagnostics import (OracleContext, transport_bound, oracle_values,
                          raw_attainable_values, wasserstein1)
from .estimator import ResidualRandomizationRegressor
from .group_actions import (GroupAction, GroupActionSet, mean_cross_moment,
                            sample_cluster, sample_exchange, sample_sign)
from .inference import (ConfidenceInterval, Hypothesis, RandomizationResult,
                        StageError, confidence_interval, debiased_estimate,
                        pvalue, test)
from .lasso import (ConvergenceError, Dataset, DegenerateFitError, LassoFit,
                    correct_residuals, fit_lasso, fit_sqrt_lasso, standardize)
from .selection import (NoFeasibleRowError, SelectionConfig, SelectionResult,
                        select, select_tuning_free)
from .simharness import (CoverageReport, SimConfig, gen_beta, gen_covariates,
                         gen_errors, run_coverage)

__version__ = "0.1.0"

__all__ = [
    "ConfidenceInterval", "ConvergenceError", "CoverageReport", "Dataset",
    "DebiasRow", "DegenerateFitError", "GramMatrix", "GroupAction",
    "GroupActionSet", "Hypothesis", "Infeasible", "LPSolverError",
    "LassoFit", "NoFeasibleRowError", "OracleContext",
    "RandomizationResult", "ResidualRandomizationRegressor",
    "SelectionConfig", "SelectionResult", "SimConfig", "StageError",
    "confidence_interval", "correct_residuals", "debiased_estimate",
    "fit_lasso", "fit_sqrt_lasso", "gen_beta", "gen_covariates",
    "gen_errors", "transport_bound", "mean_cross_moment", "oracle_values",
    "pvalue", "raw_attainable_values", "run_coverage", "sample_cluster",
    "sample_exchange", "sample_sign", "select", "select_tuning_free",
    "solve_path", "solve_row", "standardize", "test", "wasserstein1",
]
