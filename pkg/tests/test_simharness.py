import json
import math

import numpy as np
import pytest

from rrhdi import simharness
from rrhdi.simharness import (SimConfig, classify_coordinates, gen_beta,
                              gen_covariates, gen_errors, run_coverage,
                              run_replication)


class TestGenCovariates:
    def test_g1_moments(self):
        X = gen_covariates("G1", 1000, 1000, seed=0)
        assert abs(X.mean()) < 0.01
        assert abs(X.var() - 1.0) < 0.01

    def test_n1_moments(self):
        X = gen_covariates("N1", 1000, 1000, seed=1)
        assert abs(X.mean()) < 0.01
        assert abs(X.var() - 1.0) < 0.01

    def test_nt_adjacent_correlation(self):
        X = gen_covariates("NT", 10_000, 6, seed=2)
        for j in range(5):
            r = np.corrcoef(X[:, j], X[:, j + 1])[0, 1]
            assert abs(r - 0.8) < 0.02

    def test_nt_two_step_correlation(self):
        X = gen_covariates("NT", 10_000, 4, seed=3)
        r = np.corrcoef(X[:, 0], X[:, 2])[0, 1]
        assert abs(r - 0.64) < 0.03

    def test_gt_marginals_and_dependence(self):
        X = gen_covariates("GT", 20_000, 4, seed=4)
        # Gamma(1,1) - 1 marginals: mean 0, var 1, skewed right
        assert abs(X.mean()) < 0.02
        assert abs(X.var() - 1.0) < 0.05
        assert X.min() >= -1.0
        r = np.corrcoef(X[:, 0], X[:, 1])[0, 1]
        assert r > 0.5  # copula keeps strong positive dependence

    def test_wb_moments(self):
        X = gen_covariates("WB", 1000, 1000, seed=5)
        assert abs(X.mean()) < 0.05
        # variance Gamma(5) - Gamma(3)^2 = 24 - 4 = 20, heavy tailed
        assert abs(X.var() - 20.0) < 2.0

    def test_n2_mixture_variance(self):
        X = gen_covariates("N2", 1000, 1000, seed=6)
        assert abs(X.var() - 5.0) < 0.05
        assert abs(X.mean()) < 0.01

    def test_unknown_setting(self):
        with pytest.raises(ValueError, match="covariate"):
            gen_covariates("XX", 10, 10)

    def test_determinism(self):
        a = gen_covariates("NT", 20, 5, seed=7)
        b = gen_covariates("NT", 20, 5, seed=7)
        assert np.array_equal(a, b)


class TestGenErrors:
    def test_hn_zero_row_gives_zero_error(self):
        X = np.ones((5, 4))
        X[2] = 0.0
        eps = gen_errors("HN", X, seed=0)
        assert eps[2] == 0.0

    def test_hn_variance_scales_with_row_norm(self):
        rng = np.random.default_rng(1)
        X = np.ones((200_000, 8))
        eps = gen_errors("HN", X, seed=1)
        # each row has |X_i|^2 = 8, p = 8 -> variance 2
        assert abs(eps.var() - 2.0) < 0.05

    def test_hm_adds_two_point_mixture(self):
        X = np.ones((200_000, 8))
        eps = gen_errors("HM", X, seed=2)
        # variance 2 from the normal part plus 4 from the +/-2 mixture
        assert abs(eps.var() - 6.0) < 0.1

    def test_n2_variance(self):
        X = np.zeros((1_000_000, 1))
        eps = gen_errors("N2", X, seed=3)
        assert abs(eps.var() - 5.0) < 0.05

    def test_wb_shares_covariate_moments(self):
        X = np.zeros((1_000_000, 1))
        eps = gen_errors("WB", X, seed=4)
        assert abs(eps.mean()) < 0.05
        assert abs(eps.var() - 20.0) < 2.0

    def test_unknown_setting(self):
        with pytest.raises(ValueError, match="error"):
            gen_errors("XX", np.ones((4, 2)))


class TestGenBeta:
    def test_s4_construction(self):
        beta, labels = gen_beta(100, 4, seed=0)
        assert np.count_nonzero(beta) == 4
        assert set(np.abs(beta[beta != 0])) == {1.0}

    def test_s4_covers_all_six_classes(self):
        _, labels = gen_beta(100, 4, seed=1)
        keys = set(labels)
        for activity in ("active", "inactive"):
            for cls in ("isolated", "adjacent", "sandwich"):
                assert (activity, cls) in keys, (activity, cls)

    def test_sandwich_label_definition(self):
        beta = np.zeros(10)
        beta[[3, 4, 5]] = 1.0
        labels = classify_coordinates(beta)
        assert 4 in labels[("active", "sandwich")]

    def test_s15_fixture_layout_frozen(self):
        beta, _ = gen_beta(100, 15, seed=2)
        offsets = tuple(np.flatnonzero(beta))
        assert offsets == (10, 11, 12, 20, 22, 30, 31, 40, 60, 61, 62,
                           70, 72, 80, 81)

    def test_p_too_small(self):
        with pytest.raises(ValueError, match="too small"):
            gen_beta(8, 4)

    def test_unsupported_sparsity(self):
        with pytest.raises(ValueError, match="template"):
            gen_beta(100, 7)

    def test_determinism(self):
        a, _ = gen_beta(50, 4, seed=3)
        b, _ = gen_beta(50, 4, seed=3)
        assert np.array_equal(a, b)


class TestSimConfig:
    def test_exchange_excludes_heteroskedastic(self):
        for err in ("HN", "HM"):
            with pytest.raises(ValueError, match="heteroskedastic"):
                SimConfig(invariance="exchange", error_setting=err)

    def test_sign_excludes_asymmetric(self):
        for err in ("G1", "WB"):
            with pytest.raises(ValueError, match="asymmetric"):
                SimConfig(invariance="sign", error_setting=err)

    def test_sign_allows_heteroskedastic(self):
        cfg = SimConfig(invariance="sign", error_setting="HN")
        assert cfg.error_setting == "HN"

    def test_cluster_requires_spec(self):
        with pytest.raises(ValueError, match="cluster"):
            SimConfig(invariance="cluster")

    def test_unknown_settings_rejected(self):
        with pytest.raises(ValueError):
            SimConfig(covariate_setting="ZZ")
        with pytest.raises(ValueError):
            SimConfig(error_setting="ZZ")
        with pytest.raises(ValueError):
            SimConfig(invariance="bogus")

    def test_level_bounds(self):
        with pytest.raises(ValueError, match="level"):
            SimConfig(level=0.0)
        with pytest.raises(ValueError, match="level"):
            SimConfig(level=1.5)
        assert SimConfig(level=1.0).level == 1.0


TINY = dict(n=24, p=30, s=4, replications=2, actions=60, seed=5)


class TestRunCoverage:
    def test_single_replication_bookkeeping(self):
        cfg = SimConfig(**{**TINY, "replications": 1})
        rec = run_replication(cfg, 0)
        assert rec["index"] == 0
        # one monitored coordinate per represented class
        assert len(rec["coords"]) >= 1
        for res in rec["coords"].values():
            assert ("covered" in res) or ("error" in res)

    def test_determinism(self):
        cfg = SimConfig(**TINY)
        r1 = run_coverage(cfg)
        r2 = run_coverage(cfg)
        assert r1.classes == r2.classes
        assert r1.replications == r2.replications == 2

    def test_level_one_full_coverage(self):
        cfg = SimConfig(**{**TINY, "level": 1.0})
        report = run_coverage(cfg)
        for stats in report.classes.values():
            if stats["count"]:
                assert stats["coverage"] == 1.0

    def test_quantiles_non_decreasing(self):
        cfg = SimConfig(**TINY)
        report = run_coverage(cfg)
        for stats in report.classes.values():
            if stats["count"]:
                assert stats["length_q25"] <= stats["length_q75"] \
                    <= stats["length_q99"]
                assert 0.0 <= stats["coverage"] <= 1.0

    def test_config_echoed_in_report(self):
        cfg = SimConfig(**TINY)
        report = run_coverage(cfg)
        assert report.config["n"] == 24
        assert report.config["seed"] == 5

    def test_resume_completes_missing_indices(self, tmp_path):
        cfg = SimConfig(**{**TINY, "replications": 3})
        progress = tmp_path / "progress.jsonl"
        full = run_coverage(cfg, progress_path=str(progress))
        lines = progress.read_text().splitlines()
        assert len(lines) == 3

        # simulate a crash: keep only the first replication
        partial = tmp_path / "partial.jsonl"
        partial.write_text(lines[0] + "\n")
        resumed = run_coverage(cfg, progress_path=str(partial), resume=True)
        assert resumed.classes == full.classes
        new_lines = partial.read_text().splitlines()
        assert len(new_lines) == 3
        done = {json.loads(l)["index"] for l in new_lines}
        assert done == {0, 1, 2}

    def test_sign_invariance_campaign_runs(self):
        cfg = SimConfig(**{**TINY, "invariance": "sign"})
        report = run_coverage(cfg)
        assert report.replications == 2

    def test_cluster_invariance_campaign_runs(self):
        clusters = tuple(tuple(range(k, k + 6)) for k in range(0, 24, 6))
        cfg = SimConfig(**{**TINY, "invariance": "cluster",
                           "clusters": clusters})
        report = run_coverage(cfg)
        assert report.replications == 2
        assert report.config["clusters"] == [list(c) for c in clusters]

    def test_rows_layout(self):
        cfg = SimConfig(**TINY)
        report = run_coverage(cfg)
        rows = report.rows()
        assert rows == sorted(rows, key=lambda r: (r["activity"], r["class"]))
        for row in rows:
            assert {"activity", "class", "coverage", "count"} <= set(row)

    def test_parallel_workers_match_serial(self):
        cfg = SimConfig(**TINY)
        serial = run_coverage(cfg)
        parallel = run_coverage(cfg, workers=2)
        assert serial.classes == parallel.classes
