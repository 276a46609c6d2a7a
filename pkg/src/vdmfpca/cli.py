"""Command-line interface: data generation, model fitting, and benchmarking.

Subcommands
-----------
``simulate``
    Draw a synthetic dataset and write the long CSV plus a ground-truth JSON.
``fit``
    Fit the variable-domain decomposition to a long CSV and export
    eigenfunction grids, scores, variance-explained curves, the score/domain
    rank-correlation table, mean-surface grids, and a run manifest.
``benchmark``
    Run the full method-comparison study over a scenario list: per replicate,
    generate data, fit both the variable-domain model and the binned baseline,
    score both with the curve and eigenfunction metrics, and write a long
    results CSV plus a mean(SD) summary.

All randomness flows from one base seed through per-(scenario, replicate)
derived seeds, so outputs are byte-stable for a given seed regardless of the
worker count.
"""

import argparse
import csv
import datetime
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from ._kernels import BACKEND
from .binned import evaluation_limit, fit_binned
from .dataset import read_long_csv, write_long_csv
from .errors import ConfigError, DataError
from .metrics import armse_curves, armse_eigenfunctions, summarize
from .mfpca import fit_vd_mfpca, multivariate_eigen_at, score_domain_association
from .simulate import (
    SimConfig,
    derive_seed,
    eigenfunctions_type1,
    eigenfunctions_type2,
    generate,
)
from .ufpca import FpcaConfig

RESULT_COLUMNS = (
    "n",
    "domain_dist",
    "sigma",
    "n_bins",
    "replicate",
    "method",
    "metric",
    "variable",
    "component",
    "value",
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_BENCHMARK = 4

_PC_COMPONENTS = (1, 2)


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------


def cmd_simulate(n: int, dist: str, sigma: float, seed: int, out_dir, n_components: int = 10) -> dict:
    """Generate one dataset; write ``data.csv`` and ``truth.json``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    config = SimConfig(n_subjects=n, domain_dist=dist, sigma=sigma, n_components=n_components, seed=seed)
    dataset, truth = generate(config)
    data_path = out / "data.csv"
    write_long_csv(dataset, data_path)
    truth_doc = {
        "config": {
            "n_subjects": n,
            "domain_dist": dist,
            "sigma": sigma,
            "n_components": n_components,
            "seed": seed,
        },
        "component_variances": [float(v) for v in truth.eigenvalues],
        "subjects": [
            {
                "subject_id": rec.subject_id,
                "domain_length": sub.domain_length,
                "scores": {var: [float(v) for v in sub.scores[var]] for var in dataset.variables},
                "noiseless": {var: [float(v) for v in sub.noiseless[var]] for var in dataset.variables},
            }
            for rec, sub in zip(dataset.subjects, truth.subjects)
        ],
    }
    truth_path = out / "truth.json"
    truth_path.write_text(json.dumps(truth_doc, sort_keys=True, indent=1))
    return {"data": str(data_path), "truth": str(truth_path)}


# ---------------------------------------------------------------------------
# fit
# ---------------------------------------------------------------------------


def _export_lengths(lengths: np.ndarray) -> list:
    """A few representative observed lengths (quantile positions)."""
    uniq = np.unique(lengths)
    picks = sorted({int(round(q * (uniq.size - 1))) for q in (0.0, 0.25, 0.5, 0.75, 1.0)})
    return [float(uniq[i]) for i in picks]


def cmd_fit(data_csv, config: FpcaConfig, out_dir) -> dict:
    """Fit the model to a long CSV and write all artifact files."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    dataset, excluded = read_long_csv(data_csv, min_obs=config.min_obs)
    fit = fit_vd_mfpca(dataset, config)
    lengths = fit.stacked.domain_lengths
    export_lengths = _export_lengths(lengths)

    eig_path = out / "eigenfunctions.csv"
    with open(eig_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["variable", "T", "t", "component", "value"])
        for length in export_lengths:
            funcs = fit.eigenfunctions_at(length)
            grid = fit.univariate_fits[fit.variables[0]].eigen_by_length[length].grid
            for var in fit.variables:
                var_grid = fit.univariate_fits[var].eigen_by_length[length].grid
                for m, func in enumerate(funcs[var], start=1):
                    for t, v in zip(var_grid, func):
                        writer.writerow([var, _fmt(float(length)), _fmt(float(t)), m, _fmt(float(v))])

    scores_path = out / "scores.csv"
    with open(scores_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["subject_id", "component", "value"])
        for sid, row in zip(fit.stacked.subject_ids, fit.multivariate_scores):
            for m in range(fit.num_components):
                writer.writerow([sid, m + 1, _fmt(float(row[m]))])

    var_path = out / "variance_explained.csv"
    lo, hi = fit.score_model.length_range
    length_grid = np.linspace(lo, hi, 25)
    with open(var_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["T", "component", "eigenvalue", "share"])
        for length in length_grid:
            evals, _ = multivariate_eigen_at(fit.score_model, float(length), num_components=fit.score_model.total_components)
            total = float(evals.sum())
            for m in range(fit.num_components):
                share = float(evals[m] / total) if total > 0 else 0.0
                writer.writerow([_fmt(float(length)), m + 1, _fmt(float(evals[m])), _fmt(share)])

    spearman_path = out / "spearman.csv"
    with open(spearman_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["component", "rho", "p_value"])
        for m in range(fit.num_components):
            rho, pval = score_domain_association(fit.multivariate_scores[:, m], lengths)
            writer.writerow([m + 1, _fmt(rho), _fmt(pval)])

    mean_path = out / "mean_surface.csv"
    with open(mean_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["variable", "T", "t", "value"])
        for var in fit.variables:
            ufit = fit.univariate_fits[var]
            for length in export_lengths:
                grid = ufit.eigen_by_length[length].grid
                mu = ufit.mean_surface.evaluate(
                    np.column_stack([grid, np.full_like(grid, length)])
                )
                for t, v in zip(grid, mu):
                    writer.writerow([var, _fmt(float(length)), _fmt(float(t)), _fmt(float(v))])

    subjects_path = out / "subjects.csv"
    with open(subjects_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["subject_id", "domain_length"])
        for sid, length in zip(fit.stacked.subject_ids, lengths):
            writer.writerow([sid, _fmt(float(length))])

    manifest = {
        "version": __version__,
        "backend": BACKEND,
        "command": "fit",
        "data_csv": str(data_csv),
        "config": _config_to_dict(config),
        "n_subjects": len(dataset),
        "n_excluded": excluded,
        "variables": fit.variables,
        "univariate_components": {v: fit.univariate_fits[v].num_components for v in fit.variables},
        "multivariate_components": fit.num_components,
        "seed_derivation": "seed_sequence(entropy=base_seed, spawn_key=(scenario_index, replicate))",
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    manifest_path = out / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, sort_keys=True, indent=1))
    return {
        "eigenfunctions": str(eig_path),
        "scores": str(scores_path),
        "variance_explained": str(var_path),
        "spearman": str(spearman_path),
        "mean_surface": str(mean_path),
        "subjects": str(subjects_path),
        "manifest": str(manifest_path),
    }


def _config_to_dict(config: FpcaConfig) -> dict:
    return {
        "mean_basis": list(config.mean_basis),
        "cov_basis": list(config.cov_basis),
        "score_cov_basis": config.score_cov_basis,
        "degree": config.degree,
        "penalty_order": config.penalty_order,
        "lambda_grid": [float(v) for v in config.lambda_grid],
        "pve_univariate": config.pve_univariate,
        "k_max": config.k_max,
        "pve_multivariate": config.pve_multivariate,
        "grid_step": config.grid_step,
        "include_diagonal": config.include_diagonal,
        "min_obs": config.min_obs,
    }


# ---------------------------------------------------------------------------
# benchmark
# ---------------------------------------------------------------------------


def _truth_eigenfunction(variable: str, domain_length: int, grid: np.ndarray, component: int) -> np.ndarray:
    if variable == "X1":
        return eigenfunctions_type1(domain_length, grid)[component - 1]
    return eigenfunctions_type2(domain_length, grid)[component - 1]


def run_replicate(scenario: dict, replicate: int, base_seed: int, config: FpcaConfig) -> list:
    """All metric rows for one scenario replicate (both methods)."""
    scenario_index = int(scenario["index"])
    seed = derive_seed(base_seed, scenario_index, replicate)
    sim = SimConfig(
        n_subjects=int(scenario["n"]),
        domain_dist=scenario["dist"],
        sigma=float(scenario["sigma"]),
        seed=seed,
    )
    dataset, truth = generate(sim)
    base = {
        "n": scenario["n"],
        "domain_dist": scenario["dist"],
        "sigma": scenario["sigma"],
        "replicate": replicate,
    }
    rows = []

    fit = fit_vd_mfpca(dataset, config)
    for var in dataset.variables:
        ufit = fit.univariate_fits[var]
        truths, recons = [], []
        for i, rec in enumerate(dataset.subjects):
            recon = fit.reconstruct(rec.subject_id)[var]
            truths.append(truth.subjects[i].noiseless[var])
            recons.append(recon)
        rows.append(dict(base, n_bins="", method="VD-MFPCA", metric="armse_x", variable=var, component="", value=armse_curves(truths, recons)))
        for k in _PC_COMPONENTS:
            times_list, t_fns, e_fns = [], [], []
            for i, rec in enumerate(dataset.subjects):
                grid = truth.subjects[i].grid
                eigen = ufit.eigen_by_length[rec.domain_length]
                if eigen.eigenfunctions.shape[0] >= k:
                    est = np.interp(grid, eigen.grid, eigen.eigenfunctions[k - 1])
                else:
                    est = np.zeros_like(grid)
                times_list.append(grid)
                t_fns.append(truth.subjects[i].eigenfunctions[var][k - 1])
                e_fns.append(est)
            rows.append(dict(base, n_bins="", method="VD-MFPCA", metric="armse_pc", variable=var, component=k, value=armse_eigenfunctions(times_list, t_fns, e_fns)))

    for n_bins in scenario.get("bins", (5, 10)):
        bfit = fit_binned(dataset, int(n_bins), config)
        for var in dataset.variables:
            truths, recons = [], []
            times_list = {k: [] for k in _PC_COMPONENTS}
            t_fns = {k: [] for k in _PC_COMPONENTS}
            e_fns = {k: [] for k in _PC_COMPONENTS}
            for entry in bfit.bins:
                for pos, i in enumerate(entry.subject_indices):
                    sub = truth.subjects[i]
                    truths.append(np.interp(entry.grid, sub.grid, sub.noiseless[var]))
                    recons.append(entry.reconstructions[var][pos])
                    for k in _PC_COMPONENTS:
                        times_list[k].append(entry.grid)
                        t_fns[k].append(_truth_eigenfunction(var, sub.domain_length, entry.grid, k))
                        if entry.eigenfunctions[var].shape[0] >= k:
                            e_fns[k].append(entry.eigenfunctions[var][k - 1])
                        else:
                            e_fns[k].append(np.zeros_like(entry.grid))
            method_base = dict(base, n_bins=int(n_bins), method="BIN")
            rows.append(dict(method_base, metric="armse_x", variable=var, component="", value=armse_curves(truths, recons)))
            for k in _PC_COMPONENTS:
                rows.append(dict(method_base, metric="armse_pc", variable=var, component=k, value=armse_eigenfunctions(times_list[k], t_fns[k], e_fns[k])))
    return rows


def _replicate_task(args):
    scenario, replicate, base_seed, config = args
    try:
        return run_replicate(scenario, replicate, base_seed, config)
    except Exception as exc:  # noqa: BLE001 - a failed replicate must not kill the run
        return [
            {
                "n": scenario["n"],
                "domain_dist": scenario["dist"],
                "sigma": scenario["sigma"],
                "n_bins": "",
                "replicate": replicate,
                "method": "ERROR",
                "metric": "error",
                "variable": type(exc).__name__,
                "component": "",
                "value": float("nan"),
            }
        ]


def _row_sort_key(row):
    return (
        row["n"],
        row["domain_dist"],
        repr(row["sigma"]),
        str(row["n_bins"]),
        row["replicate"],
        row["method"],
        row["metric"],
        row["variable"],
        str(row["component"]),
    )


def run_benchmark(scenarios: list, replicates: int, jobs: int, base_seed: int, out_csv, config: FpcaConfig = None):
    """Run every (scenario, replicate), write results and summary CSVs.

    Returns ``(rows, n_failed)``.  Rows are sorted on a deterministic key, so
    output bytes do not depend on the worker count.
    """
    config = config or FpcaConfig()
    if replicates < 1:
        raise ConfigError("replicates must be >= 1")
    if jobs < 1:
        raise ConfigError("jobs must be >= 1")
    indexed = []
    for i, sc in enumerate(scenarios):
        sc = dict(sc)
        sc["index"] = i
        indexed.append(sc)
    tasks = [(sc, r, base_seed, config) for sc in indexed for r in range(replicates)]

    if jobs == 1:
        results = [_replicate_task(task) for task in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_replicate_task, tasks))

    rows = [row for chunk in results for row in chunk]
    rows.sort(key=_row_sort_key)
    n_failed = sum(1 for row in rows if row["method"] == "ERROR")

    out_csv = Path(out_csv)
    out_csv.parent.mkdir(parents=True, exist_ok=True)
    with open(out_csv, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RESULT_COLUMNS)
        for row in rows:
            writer.writerow([_fmt(row[c]) for c in RESULT_COLUMNS])

    _write_summary(rows, out_csv.with_suffix(out_csv.suffix + ".summary.csv"))
    return rows, n_failed


def _write_summary(rows, path):
    cells = {}
    for row in rows:
        if row["method"] == "ERROR":
            continue
        key = (
            row["n"],
            row["domain_dist"],
            row["sigma"],
            row["method"],
            row["n_bins"],
            row["metric"],
            row["variable"],
            row["component"],
        )
        cells.setdefault(key, []).append(row["value"])
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "domain_dist", "sigma", "method", "n_bins", "metric", "variable", "component", "mean", "sd", "replicates"])
        for key in sorted(cells, key=lambda k: tuple(str(x) for x in k)):
            vals = cells[key]
            if len(vals) >= 2:
                mean, sd = summarize(vals)
            else:
                mean, sd = float(vals[0]), 0.0
            writer.writerow([_fmt(x) for x in key] + [_fmt(mean), _fmt(sd), len(vals)])


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _load_config(path) -> FpcaConfig:
    if path is None:
        return FpcaConfig()
    raw = json.loads(Path(path).read_text())
    return FpcaConfig.from_dict(raw)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vdmfpca", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="generate a synthetic dataset")
    sim.add_argument("--n", type=int, required=True)
    sim.add_argument("--dist", choices=["uniform", "nbinom"], default="uniform")
    sim.add_argument("--sigma", type=float, default=0.1)
    sim.add_argument("--seed", type=int, required=True)
    sim.add_argument("--out", required=True)
    sim.add_argument("--components", type=int, default=10)

    fit = sub.add_parser("fit", help="fit the model to a long CSV")
    fit.add_argument("--data", required=True)
    fit.add_argument("--config", default=None)
    fit.add_argument("--out", required=True)

    bench = sub.add_parser("benchmark", help="run the method-comparison study")
    bench.add_argument("--scenarios", required=True)
    bench.add_argument("--replicates", type=int, required=True)
    bench.add_argument("--jobs", type=int, default=1)
    bench.add_argument("--seed", type=int, required=True)
    bench.add_argument("--out", required=True)
    bench.add_argument("--config", default=None)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "simulate":
            cmd_simulate(args.n, args.dist, args.sigma, args.seed, args.out, args.components)
            return EXIT_OK
        if args.command == "fit":
            cmd_fit(args.data, _load_config(args.config), args.out)
            return EXIT_OK
        if args.command == "benchmark":
            scenarios = json.loads(Path(args.scenarios).read_text())
            if not isinstance(scenarios, list) or not scenarios:
                raise ConfigError("scenarios file must hold a non-empty JSON list")
            rows, n_failed = run_benchmark(
                scenarios, args.replicates, args.jobs, args.seed, args.out, _load_config(args.config)
            )
            total = len(scenarios) * args.replicates
            if n_failed > 0.05 * total:
                print(f"{n_failed}/{total} replicates failed", file=sys.stderr)
                return EXIT_BENCHMARK
            return EXIT_OK
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
