"""Synthetic-data generators and the coverage experiment runner.

Covariate settings: N1 standard normal; G1 centered Gamma(1,1); N2 a
two-point normal-mean mixture; NT Toeplitz-correlated normal; GT a
Gaussian copula with the Toeplitz correlation pushed through centered
Gamma(1,1) marginals; WB centered Weibull(scale 1, shape 1/2).  Error
settings reuse N1/G1/N2/WB and add the heteroskedastic HN/HM whose
per-observation variance is 2|X_i|^2/p.

The coefficient vector places Rademacher entries so that active and
inactive coordinates fall into isolated / adjacent / sandwiched
neighbor classes; the experiment runner reports empirical interval
coverage and length quantiles per class.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field, asdict

import numpy as np
from scipy import stats

from . import group_actions, inference, lasso
from .inference import Hypothesis
from .selection import SelectionConfig

COVARIATE_SETTINGS = ("N1", "G1", "N2", "NT", "GT", "WB")
ERROR_SETTINGS = ("N1", "G1", "N2", "WB", "HN", "HM")
INVARIANCES = ("exchange", "sign", "cluster")

#: Weibull(scale 1, shape 1/2) mean = Gamma(3) = 2
_WEIBULL_SHAPE = 0.5
_WEIBULL_MEAN = 2.0
_TOEPLITZ_RHO = 0.8


def _toeplitz_corr(p: int) -> np.ndarray:
    idx = np.arange(p)
    return _TOEPLITZ_RHO ** np.abs(idx[:, None] - idx[None, :])


def _centered_gamma(rng: np.random.Generator, size) -> np.ndarray:
    return rng.gamma(shape=1.0, scale=1.0, size=size) - 1.0


def _centered_weibull(rng: np.random.Generator, size) -> np.ndarray:
    return rng.weibull(_WEIBULL_SHAPE, size=size) - _WEIBULL_MEAN


def _two_point_mean(rng: np.random.Generator, size) -> np.ndarray:
    mu = rng.choice([-2.0, 2.0], size=size)
    return rng.standard_normal(size) + mu


def gen_covariates(setting: str, n: int, p: int, seed=None) -> np.ndarray:
    """Draw an n x p design matrix for the named covariate setting."""
    rng = np.random.default_rng(seed)
    if setting == "N1":
        return rng.standard_normal((n, p))
    if setting == "G1":
        return _centered_gamma(rng, (n, p))
    if setting == "N2":
        return _two_point_mean(rng, (n, p))
    if setting == "NT":
        chol = np.linalg.cholesky(_toeplitz_corr(p))
        return rng.standard_normal((n, p)) @ chol.T
    if setting == "GT":
        # Gaussian copula: Toeplitz-correlated normals pushed through
        # the probability integral transform to Gamma(1,1) marginals
        chol = np.linalg.cholesky(_toeplitz_corr(p))
        z = rng.standard_normal((n, p)) @ chol.T
        u = stats.norm.cdf(z)
        return stats.gamma.ppf(u, a=1.0, scale=1.0) - 1.0
    if setting == "WB":
        return _centered_weibull(rng, (n, p))
    raise ValueError(f"unknown covariate setting {setting!r}")


def gen_errors(setting: str, X: np.ndarray, seed=None) -> np.ndarray:
    """Draw the error vector; HN/HM scale variance by 2|X_i|^2/p."""
    n, p = X.shape
    rng = np.random.default_rng(seed)
    if setting == "N1":
        return rng.standard_normal(n)
    if setting == "G1":
        return _centered_gamma(rng, n)
    if setting == "N2":
        return _two_point_mean(rng, n)
    if setting == "WB":
        return _centered_weibull(rng, n)
    if setting in ("HN", "HM"):
        sd = np.sqrt(2.0 * np.sum(X ** 2, axis=1) / p)
        eps = rng.standard_normal(n) * sd
        if setting == "HM":
            eps += rng.choice([-2.0, 2.0], size=n)
        return eps
    raise ValueError(f"unknown error setting {setting!r}")


#: relative offsets of one motif: A A A 0 A covers every neighbor class
#: (sandwich/adjacent/isolated actives, sandwiched inactive alongside)
_MOTIF = (0, 1, 2, 4)
_MOTIF_SPAN = 5

# s = 15 layout: offsets of active coordinates (documented fixture)
_S15_OFFSETS = (10, 11, 12, 20, 22, 30, 31, 40, 60, 61, 62, 70, 72, 80, 81)

ACTIVE_CLASSES = ("isolated", "adjacent", "sandwich")


def gen_beta(p: int, s: int, seed=None) -> tuple[np.ndarray, dict]:
    """Rademacher coefficients on a neighbor-class placement template.

    Returns (beta, labels) where labels maps (activity, class) pairs
    such as ("active", "sandwich") to coordinate index lists.  Classes
    are defined by the activity of the two neighbors: both inactive ->
    isolated, exactly one active -> adjacent, both active -> sandwich.
    """
    if s == 4:
        offsets = tuple(2 + o for o in _MOTIF)
        span = 2 + _MOTIF_SPAN
    elif s == 15:
        offsets = _S15_OFFSETS
        span = max(_S15_OFFSETS) + 1
    else:
        raise ValueError(f"no placement template for s={s} (supported: 4, 15)")
    if p < span + 4:
        raise ValueError(f"p={p} too small for the s={s} template")
    rng = np.random.default_rng(seed)
    beta = np.zeros(p)
    beta[list(offsets)] = rng.choice([-1.0, 1.0], size=s)
    labels = classify_coordinates(beta)
    return beta, labels


def classify_coordinates(beta: np.ndarray) -> dict:
    """Group interior coordinates by the activity of their neighbors."""
    p = len(beta)
    active = beta != 0.0
    labels: dict[tuple[str, str], list[int]] = {}
    for j in range(1, p - 1):
        neighbors = int(active[j - 1]) + int(active[j + 1])
        cls = ACTIVE_CLASSES[neighbors]
        key = ("active" if active[j] else "inactive", cls)
        labels.setdefault(key, []).append(j)
    return labels


@dataclass(frozen=True)
class SimConfig:
    n: int = 50
    p: int = 100
    s: int = 4
    covariate_setting: str = "N1"
    error_setting: str = "N1"
    invariance: str = "exchange"
    clusters: tuple[tuple[int, ...], ...] | None = None
    replications: int = 200
    actions: int = 1000
    level: float = 0.95
    delta: float = 10_000.0
    seed: int = 0
    monitor_per_class: int = 1  # coordinates monitored per neighbor class

    def __post_init__(self):
        if self.covariate_setting not in COVARIATE_SETTINGS:
            raise ValueError(
                f"unknown covariate setting {self.covariate_setting!r}")
        if self.error_setting not in ERROR_SETTINGS:
            raise ValueError(f"unknown error setting {self.error_setting!r}")
        if self.invariance not in INVARIANCES:
            raise ValueError(f"unknown invariance {self.invariance!r}")
        if self.invariance == "exchange" and self.error_setting in ("HN", "HM"):
            raise ValueError(
                "exchangeable runs exclude heteroskedastic errors (HN/HM)")
        if self.invariance == "sign" and self.error_setting in ("G1", "WB"):
            raise ValueError(
                "sign-symmetric runs exclude asymmetric errors (G1/WB)")
        if self.invariance == "cluster" and self.clusters is None:
            raise ValueError("cluster invariance requires a cluster spec")
        if not 0.0 < self.level <= 1.0:
            raise ValueError("level must lie in (0, 1]")
        if self.replications < 1 or self.actions < 1:
            raise ValueError("replications and actions must be >= 1")


@dataclass(frozen=True)
class CoverageReport:
    config: dict
    classes: dict  # (activity, class) -> stats dict
    replications: int
    failures: int
    runtime: float | None

    def rows(self) -> list[dict]:
        out = []
        for (activity, cls), stats_ in sorted(self.classes.items()):
            out.append({"activity": activity, "class": cls, **stats_})
        return out


def _sample_actions(cfg: SimConfig, n: int, seed) -> group_actions.GroupActionSet:
    if cfg.invariance == "exchange":
        return group_actions.sample_exchange(n, cfg.actions, seed)
    if cfg.invariance == "sign":
        return group_actions.sample_sign(n, cfg.actions, seed)
    return group_actions.sample_cluster(cfg.clusters, cfg.actions, seed)


def _monitored(labels: dict, per_class: int) -> dict:
    return {key: idx[:per_class] for key, idx in sorted(labels.items())}


def run_replication(cfg: SimConfig, index: int) -> dict:
    """Generate one dataset and test every monitored coordinate."""
    seeds = np.random.SeedSequence(cfg.seed).spawn(cfg.replications)[index]
    s_cov, s_err, s_beta, s_act = seeds.spawn(4)
    X = gen_covariates(cfg.covariate_setting, cfg.n, cfg.p, s_cov)
    X = X / np.where(X.std(axis=0, ddof=1) > 0, X.std(axis=0, ddof=1), 1.0)
    beta, labels = gen_beta(cfg.p, cfg.s, s_beta)
    eps = gen_errors(cfg.error_setting, X, s_err)
    data = lasso.Dataset(X=X, y=X @ beta + eps, standardized=True)
    actions = _sample_actions(cfg, cfg.n, s_act)

    sel_cfg = SelectionConfig(delta=cfg.delta)
    pi0 = 1.0 - cfg.level
    record = {"index": index, "coords": {}}
    fit = inference._fit_pilot(data, None)
    mean_cross = group_actions.mean_cross_moment(X, actions)
    for key, coords in _monitored(labels, cfg.monitor_per_class).items():
        for j in coords:
            try:
                result = inference.test(
                    data, Hypothesis.coordinate(j, cfg.p), actions,
                    sel_cfg, fit=fit, mean_cross=mean_cross)
                ci = inference.confidence_interval(
                    result.debiased, result.values, pi0, cfg.n)
                record["coords"][str(j)] = {
                    "activity": key[0], "class": key[1],
                    "covered": bool(ci.contains(beta[j])),
                    "length": ci.length,
                }
            except Exception as exc:  # noqa: BLE001 - campaign keeps going
                record["coords"][str(j)] = {
                    "activity": key[0], "class": key[1],
                    "error": f"{type(exc).__name__}: {exc}",
                }
    return record


def aggregate(cfg: SimConfig, records: list[dict],
              runtime: float | None = None) -> CoverageReport:
    """Fold per-replication records into per-class coverage statistics."""
    per_class: dict[tuple[str, str], dict] = {}
    failures = 0
    for record in records:
        for res in record["coords"].values():
            key = (res["activity"], res["class"])
            bucket = per_class.setdefault(key, {"covered": 0, "count": 0,
                                                "lengths": []})
            if "error" in res:
                failures += 1
                continue
            bucket["count"] += 1
            bucket["covered"] += int(res["covered"])
            bucket["lengths"].append(res["length"])
    classes = {}
    for key, bucket in per_class.items():
        lengths = np.array(bucket["lengths"]) if bucket["lengths"] else \
            np.array([math.nan])
        with np.errstate(invalid="ignore"):  # infinite lengths at pi0 = 0
            classes[key] = {
                "coverage": bucket["covered"] / bucket["count"]
                if bucket["count"] else math.nan,
                "count": bucket["count"],
                "length_q25": float(np.quantile(lengths, 0.25)),
                "length_q75": float(np.quantile(lengths, 0.75)),
                "length_q99": float(np.quantile(lengths, 0.99)),
            }
    cfg_dict = asdict(cfg)
    if cfg_dict.get("clusters") is not None:
        cfg_dict["clusters"] = [list(c) for c in cfg_dict["clusters"]]
    return CoverageReport(config=cfg_dict, classes=classes,
                          replications=len(records), failures=failures,
                          runtime=runtime)


def run_coverage(cfg: SimConfig, *, progress_path=None,
                 resume: bool = False, workers: int = 1) -> CoverageReport:
    """Run the campaign; optionally checkpoint one JSON line per rep.

    With ``resume`` and an existing progress file, only the missing
    replication indices are run (per-replication seeds are derived
    independently, so order does not matter).  ``workers`` > 1 spreads
    replications over a process pool.
    """
    start = time.time()
    records: dict[int, dict] = {}
    if resume and progress_path is not None:
        try:
            with open(progress_path) as fh:
                for line in fh:
                    rec = json.loads(line)
                    records[rec["index"]] = rec
        except FileNotFoundError:
            pass
    todo = [i for i in range(cfg.replications) if i not in records]
    out_fh = open(progress_path, "a") if progress_path is not None else None
    try:
        if workers > 1 and len(todo) > 1:
            from concurrent.futures import ProcessPoolExecutor
            with ProcessPoolExecutor(max_workers=workers) as pool:
                results = pool.map(run_replication,
                                   [cfg] * len(todo), todo)
                for rec in results:
                    records[rec["index"]] = rec
                    if out_fh is not None:
                        out_fh.write(json.dumps(rec, sort_keys=True) + "\n")
                        out_fh.flush()
        else:
            for index in todo:
                rec = run_replication(cfg, index)
                records[index] = rec
                if out_fh is not None:
                    out_fh.write(json.dumps(rec, sort_keys=True) + "\n")
                    out_fh.flush()
    finally:
        if out_fh is not None:
            out_fh.close()
    ordered = [records[i] for i in sorted(records)]
    return aggregate(cfg, ordered, runtime=time.time() - start)
