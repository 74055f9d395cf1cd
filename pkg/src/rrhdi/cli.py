"""Command-line front end.

Input data is a CSV with a header row, the response in the first
column and covariates in the remaining columns.  Cluster files list
one cluster per line as comma-separated 0-based row indices.  Exit
codes: 0 success, 2 usage or validation error, 3 numerical failure.
"""

from __future__ import annotations

import csv
import json
import os
import sys

import click
import numpy as np

from . import diagnostics, group_actions, inference, lasso, simharness
from .inference import Hypothesis, StageError
from .selection import SelectionConfig

EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _resolve_seed(seed):
    if seed is not None:
        return seed
    env = os.environ.get("RRHDI_SEED")
    return int(env) if env else None


def _read_csv(path: str) -> lasso.Dataset:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            _fail(EXIT_VALIDATION, f"{path}: empty file")
        width = len(header)
        if width < 2:
            _fail(EXIT_VALIDATION, f"{path}: need a response column and at "
                  "least one covariate column")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != width:
                _fail(EXIT_VALIDATION,
                      f"{path}: line {lineno}: expected {width} fields, "
                      f"got {len(row)}")
            try:
                rows.append([float(v) for v in row])
            except ValueError:
                _fail(EXIT_VALIDATION,
                      f"{path}: line {lineno}: non-numeric value")
    if len(rows) < 2:
        _fail(EXIT_VALIDATION, f"{path}: need at least two data rows")
    arr = np.array(rows)
    try:
        return lasso.Dataset(X=arr[:, 1:], y=arr[:, 0])
    except ValueError as exc:
        _fail(EXIT_VALIDATION, f"{path}: {exc}")


def _read_clusters(path: str):
    clusters = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                clusters.append([int(v) for v in line.split(",")])
            except ValueError:
                _fail(EXIT_VALIDATION,
                      f"{path}: line {lineno}: non-integer index")
    if not clusters:
        _fail(EXIT_VALIDATION, f"{path}: no clusters found")
    return clusters


def _sample_actions(invariance, n, count, seed, cluster_file):
    try:
        if invariance == "exchange":
            return group_actions.sample_exchange(n, count, seed)
        if invariance == "sign":
            return group_actions.sample_sign(n, count, seed)
        return group_actions.sample_cluster(
            _read_clusters(cluster_file), count, seed)
    except ValueError as exc:
        _fail(EXIT_VALIDATION, str(exc))


def _prepare(input, coord, a_file, standardize):
    data = _read_csv(input)
    if data.n % 2 != 0:
        _fail(EXIT_VALIDATION,
              f"{input}: n={data.n} is odd; drop one observation")
    if standardize:
        data = lasso.standardize(data)
    if a_file is not None:
        a = np.loadtxt(a_file, ndmin=1)
        if a.shape != (data.p,):
            _fail(EXIT_VALIDATION,
                  f"{a_file}: contrast length {a.shape} != p={data.p}")
    else:
        if coord is None:
            _fail(EXIT_VALIDATION, "provide --coord or --a-file")
        if not 0 <= coord < data.p:
            _fail(EXIT_VALIDATION, f"--coord {coord} outside 0..{data.p - 1}")
        a = Hypothesis.coordinate(coord, data.p).a
    return data, a


def _write_report(rows: list[dict], output: str | None, fmt: str):
    if fmt == "json":
        payload = rows[0] if len(rows) == 1 else rows
        text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    else:
        keys = sorted(rows[0])
        lines = [",".join(keys)]
        for row in rows:
            lines.append(",".join(repr(row[k]) if isinstance(row[k], float)
                                  else str(row[k]) for k in keys))
        text = "\n".join(lines) + "\n"
    if output is None:
        click.echo(text, nl=False)
    else:
        with open(output, "w") as fh:
            fh.write(text)


_common = [
    click.option("--invariance", default="exchange",
                 type=click.Choice(["exchange", "sign", "cluster"])),
    click.option("--cluster-file", default=None, type=click.Path()),
    click.option("--actions", default=1000, show_default=True),
    click.option("--delta", default=10_000.0, show_default=True),
    click.option("--grid-points", default=50, show_default=True,
                 help="geometric lambda grid size on [0.01, 1]"),
    click.option("--seed", default=None, type=int,
                 help="falls back to RRHDI_SEED"),
    click.option("--standardize/--no-standardize", default=True),
    click.option("--output", "-o", default=None, type=click.Path()),
    click.option("--format", "fmt", default="json",
                 type=click.Choice(["json", "csv"])),
]


def _with_common(fn):
    for opt in reversed(_common):
        fn = opt(fn)
    return fn


def _selection_config(delta, grid_points):
    if grid_points < 1:
        _fail(EXIT_VALIDATION, "--grid-points must be >= 1")
    grid = np.geomspace(1.0, 0.01, grid_points)
    return SelectionConfig(delta=delta, lambda_grid=grid)


def _validate_invariance(invariance, cluster_file):
    if invariance == "cluster" and cluster_file is None:
        _fail(EXIT_VALIDATION, "--invariance cluster requires --cluster-file")
    if invariance != "cluster" and cluster_file is not None:
        _fail(EXIT_VALIDATION, "--cluster-file only valid with "
              "--invariance cluster")


@click.group()
def main():
    """Residual-randomization inference for high-dimensional regression."""


@main.command("test")
@click.argument("input", type=click.Path(exists=True))
@click.option("--coord", default=None, type=int, help="0-based coordinate")
@click.option("--a-file", default=None, type=click.Path(exists=True),
              help="file with an explicit contrast vector")
@click.option("--a0", default=0.0, show_default=True)
@_with_common
def cmd_test(input, coord, a_file, a0, invariance, cluster_file, actions,
             delta, grid_points, seed, standardize, output, fmt):
    """Test a' beta = a0 on CSV data (response first column)."""
    _validate_invariance(invariance, cluster_file)
    seed = _resolve_seed(seed)
    data, a = _prepare(input, coord, a_file, standardize)
    action_set = _sample_actions(invariance, data.n, actions, seed,
                                 cluster_file)
    try:
        result = inference.test(data, Hypothesis(a=a, a0=a0), action_set,
                                _selection_config(delta, grid_points))
    except StageError as exc:
        _fail(EXIT_NUMERICAL, str(exc))
    _write_report([{
        "p_one_sided": result.p_one_sided,
        "p_two_sided": result.p_two_sided,
        "debiased": result.debiased,
        "t_obs": result.t_obs,
        "lambda_star": result.selection.lambda_star,
        "n_actions": len(action_set),
        "seed": seed,
    }], output, fmt)


@main.command("ci")
@click.argument("input", type=click.Path(exists=True))
@click.option("--coords", required=True,
              help="comma-separated 0-based coordinates")
@click.option("--level", default=0.95, show_default=True)
@_with_common
def cmd_ci(input, coords, level, invariance, cluster_file, actions, delta,
           grid_points, seed, standardize, output, fmt):
    """Confidence intervals for selected coordinates."""
    _validate_invariance(invariance, cluster_file)
    if not 0.0 < level < 1.0:
        _fail(EXIT_VALIDATION, f"--level {level} outside (0, 1)")
    try:
        coord_list = [int(c) for c in coords.split(",")]
    except ValueError:
        _fail(EXIT_VALIDATION, f"--coords {coords!r}: non-integer entry")
    seed = _resolve_seed(seed)
    data, _ = _prepare(input, coord_list[0], None, standardize)
    for j in coord_list:
        if not 0 <= j < data.p:
            _fail(EXIT_VALIDATION, f"coordinate {j} outside 0..{data.p - 1}")
    action_set = _sample_actions(invariance, data.n, actions, seed,
                                 cluster_file)
    rows = []
    try:
        fit = inference._fit_pilot(data, None)
        mean_cross = group_actions.mean_cross_moment(data.X, action_set)
        for j in coord_list:
            result = inference.test(
                data, Hypothesis.coordinate(j, data.p), action_set,
                _selection_config(delta, grid_points),
                fit=fit, mean_cross=mean_cross)
            ci = inference.confidence_interval(
                result.debiased, result.values, 1.0 - level, data.n)
            rows.append({"coord": j, "lower": ci.lower, "upper": ci.upper,
                         "level": level, "debiased": result.debiased,
                         "seed": seed})
    except StageError as exc:
        _fail(EXIT_NUMERICAL, str(exc))
    _write_report(rows, output, fmt)


@main.command("simulate")
@click.argument("config", type=click.Path(exists=True))
@click.option("--output-dir", "-o", required=True, type=click.Path())
@click.option("--resume", is_flag=True,
              help="complete missing replications of a partial campaign")
@click.option("--threads", default=1, show_default=True,
              help="replication worker processes")
def cmd_simulate(config, output_dir, resume, threads):
    """Run a coverage campaign from a JSON config file."""
    with open(config) as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            _fail(EXIT_VALIDATION, f"{config}: invalid JSON ({exc})")
    if isinstance(raw.get("clusters"), list):
        raw["clusters"] = tuple(tuple(c) for c in raw["clusters"])
    try:
        cfg = simharness.SimConfig(**raw)
    except (TypeError, ValueError) as exc:
        _fail(EXIT_VALIDATION, f"{config}: {exc}")
    os.makedirs(output_dir, exist_ok=True)
    progress = os.path.join(output_dir, "replications.jsonl")
    try:
        report = simharness.run_coverage(cfg, progress_path=progress,
                                         resume=resume, workers=threads)
    except StageError as exc:
        _fail(EXIT_NUMERICAL, str(exc))
    click.echo(f"campaign finished in {report.runtime:.1f}s "
               f"({report.failures} failures)", err=True)
    payload = {"config": report.config,
               "replications": report.replications,
               "failures": report.failures,
               # runtime omitted from files: outputs must be reproducible
               "runtime": None,
               "classes": report.rows()}
    with open(os.path.join(output_dir, "report.json"), "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")
    rows = report.rows()
    if rows:
        with open(os.path.join(output_dir, "report.csv"), "w",
                  newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=sorted(rows[0]))
            writer.writeheader()
            writer.writerows(rows)


@main.command("diagnose")
@click.option("--n", default=50, show_default=True)
@click.option("--p", default=100, show_default=True)
@click.option("--s", default=4, show_default=True)
@click.option("--reps", default=10, show_default=True)
@click.option("--actions", default=200, show_default=True)
@click.option("--noise-scale", default=1.0, show_default=True)
@click.option("--seed", default=None, type=int)
@click.option("--output", "-o", default=None, type=click.Path())
@click.option("--format", "fmt", default="json",
              type=click.Choice(["json", "csv"]))
def cmd_diagnose(n, p, s, reps, actions, noise_scale, seed, output, fmt):
    """Compare oracle and attainable distributions on synthetic data."""
    seed = _resolve_seed(seed)
    children = np.random.SeedSequence(seed).spawn(reps)
    rows = []
    try:
        for child in children:
            rows.append(diagnose_once(n, p, s, actions, noise_scale, child))
    except (StageError, ValueError, RuntimeError) as exc:
        _fail(EXIT_NUMERICAL, str(exc))
    _write_report(rows, output, fmt)


def diagnose_once(n, p, s, n_actions, noise_scale, seed) -> dict:
    """One synthetic instance: W1, its upper bound and the bound terms."""
    from . import clime, selection

    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    s_cov, s_err, s_beta, s_act = seed.spawn(4)
    X = simharness.gen_covariates("N1", n, p, s_cov)
    sd = X.std(axis=0, ddof=1)
    X = X / np.where(sd > 0, sd, 1.0)
    beta, _ = simharness.gen_beta(p, s, s_beta)
    eps = simharness.gen_errors("N1", X, s_err) * noise_scale
    data = lasso.Dataset(X=X, y=X @ beta + eps, standardized=True)
    ctx = diagnostics.OracleContext(beta_true=beta, eps_true=eps)
    action_set = group_actions.sample_exchange(n, n_actions, s_act)

    if noise_scale == 0.0:
        # noiseless fixture: force the pilot to the truth so the
        # oracle and attainable distributions coincide
        fit = lasso.LassoFit(beta=beta, lambda1=0.0,
                             residuals=np.zeros(n),
                             support_size=int(np.count_nonzero(beta)))
    else:
        fit = lasso.fit_sqrt_lasso(data)
        if fit.degenerate:
            # exact interpolation: fall back to a tiny-penalty Lasso pilot
            fit = lasso.fit_lasso(data, 1e-10)
    gram = clime.GramMatrix.from_design(X)
    mean_cross = group_actions.mean_cross_moment(X, action_set)
    sel = selection.select(gram, Hypothesis.coordinate(0, p).a, X,
                           action_set, SelectionConfig(),
                           mean_cross=mean_cross)
    oracle = diagnostics.oracle_values(ctx, fit, sel.row, X, action_set,
                                       Hypothesis.coordinate(0, p).a)
    attainable = diagnostics.raw_attainable_values(sel.row, fit, X,
                                                   action_set)
    w1 = diagnostics.wasserstein1(oracle, attainable)
    bound = diagnostics.transport_bound(fit, ctx, sel.row, X, action_set,
                                    mean_cross=mean_cross)
    return {"w1": w1, "bound": bound,
            "bias_term": sel.row.gap,
            "cost_term": sel.row.l1 * mean_cross}


if __name__ == "__main__":
    main()
