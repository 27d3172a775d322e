"""Seeded Monte-Carlo sweeps driven by a flat key=value config file.

Config grammar (one `key = value` per line, `#` starts a comment, commas
make a list):

    p = 500                      # int, sweepable
    n = 100, 200, 300, 400       # sweepable: the sweep is the cross product
    k = 10                       # int, sweepable
    sigma = 1.0                  # float, sweepable
    covariance = identity        # or equicorrelated(0.2); sweepable
    beta_lo = 1.0
    beta_hi = 2.0
    signs = random               # or positive
    seed = 42
    trials = 50
    regressors = foba, lasso     # any of omp, foba, marginal, lasso
    foba_backward_ratio = 0.5    # optional
    lasso_num_points = 100       # optional
    lasso_decay = 0.9330329915368074   # optional; default spans 3 decades
    c_values = 1.0, 1.5
    delta_mode = ratio           # or correlation
    sigma_denominator = n        # or n-s
    output = results.csv

Results are long-format CSV, one row per (cell, trial, regressor, c), with
a `<output>.summary.csv` companion of per-(cell, regressor, c) means and
standard deviations.  Identical config and seed reproduce every value
except the wall_time column.  Per-trial instance seeds are seed + trial
index, so regressors and c values within a trial share the instance.
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .datagen import EquiCorrelated, GenConfig, generate
from .errors import InvalidConfig, SparsePathError
from .evaluation import compute_metrics
from .linalg import restricted_ls
from .regressors import LassoGrid, RegressorSpec
from .threshold import PathConfig, run_path_for_c_grid

RESULT_COLUMNS = [
    "experiment_id", "seed", "regressor", "c", "n", "p", "k", "sigma",
    "stop_s", "f1", "precision", "recall", "err", "wall_time", "status",
]

SUMMARY_COLUMNS = [
    "experiment_id", "regressor", "c", "n", "p", "k", "sigma", "trials_ok",
    "f1_mean", "f1_std", "precision_mean", "precision_std",
    "recall_mean", "recall_std", "err_mean", "err_std",
    "stop_s_mean", "stop_s_std",
]


@dataclass(frozen=True)
class Cell:
    """One point of the generation sweep."""

    p: int
    n: int
    k: int
    sigma: float
    covariance: Union[str, EquiCorrelated]

    @property
    def cov_label(self) -> str:
        if isinstance(self.covariance, EquiCorrelated):
            return f"equicorrelated({self.covariance.a:g})"
        return "identity"


@dataclass
class ExperimentConfig:
    cells: list[Cell]
    regressors: list[RegressorSpec]
    c_values: list[float]
    trials: int
    seed: int
    delta_mode: str = "ratio"
    sigma_denominator: str = "n"
    beta_range: tuple[float, float] = (1.0, 2.0)
    signs: str = "random"
    output_path: str = "results.csv"

    def __post_init__(self):
        if self.trials < 1:
            raise InvalidConfig("trials must be >= 1")
        for name, values in (("cells", self.cells), ("regressors", self.regressors),
                             ("c_values", self.c_values)):
            if not values:
                raise InvalidConfig(f"{name} must be nonempty")


def _parse_covariance(text: str) -> Union[str, EquiCorrelated]:
    text = text.strip().lower()
    if text == "identity":
        return "identity"
    if text.startswith("equicorrelated(") and text.endswith(")"):
        return EquiCorrelated(float(text[len("equicorrelated("):-1]))
    raise InvalidConfig(f"unknown covariance {text!r}")


def _split_list(value: str) -> list[str]:
    return [v.strip() for v in value.split(",") if v.strip()]


def parse_config(text: str) -> ExperimentConfig:
    """Parse the flat key=value grammar documented in the module docstring."""
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidConfig(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = line.split("=", 1)
        raw[key.strip().lower()] = value.strip()

    def take(key: str, default: Optional[str] = None) -> str:
        if key in raw:
            return raw.pop(key)
        if default is None:
            raise InvalidConfig(f"missing required key {key!r}")
        return default

    ps = [int(v) for v in _split_list(take("p"))]
    ns = [int(v) for v in _split_list(take("n"))]
    ks = [int(v) for v in _split_list(take("k"))]
    sigmas = [float(v) for v in _split_list(take("sigma"))]
    covs = [_parse_covariance(v) for v in _split_list(take("covariance", "identity"))]
    cells = [Cell(p, n, k, s, cov)
             for p in ps for n in ns for k in ks for s in sigmas for cov in covs]

    foba_ratio = float(take("foba_backward_ratio", "0.5"))
    lasso_points = int(take("lasso_num_points", "100"))
    lasso_decay = raw.pop("lasso_decay", None)
    grid = LassoGrid(lasso_points, float(lasso_decay) if lasso_decay is not None else None)
    regressors = []
    for kind in _split_list(take("regressors")):
        kind = kind.lower()
        if kind == "foba":
            regressors.append(RegressorSpec.foba(foba_ratio))
        elif kind == "lasso":
            regressors.append(RegressorSpec("lasso", lasso_grid=grid))
        else:
            regressors.append(RegressorSpec(kind))

    config = ExperimentConfig(
        cells=cells,
        regressors=regressors,
        c_values=[float(v) for v in _split_list(take("c_values"))],
        trials=int(take("trials")),
        seed=int(take("seed")),
        delta_mode=take("delta_mode", "ratio"),
        sigma_denominator=take("sigma_denominator", "n"),
        beta_range=(float(take("beta_lo", "1.0")), float(take("beta_hi", "2.0"))),
        signs=take("signs", "random"),
        output_path=take("output", "results.csv"),
    )
    if raw:
        raise InvalidConfig(f"unknown config keys: {sorted(raw)}")
    return config


def load_config(path: str) -> ExperimentConfig:
    with open(path, "r") as fh:
        return parse_config(fh.read())


def _fmt(value) -> str:
    if isinstance(value, float):
        return "%.17g" % value
    return str(value)


def run_experiment(config: ExperimentConfig, progress=None) -> list[dict]:
    """Run the sweep and stream rows to the configured CSV.

    A per-trial failure produces rows with NaN metrics and an error status
    instead of aborting; everything already computed stays on disk.
    """
    rows: list[dict] = []
    out = open(config.output_path, "w", newline="")
    writer = csv.writer(out)
    writer.writerow(RESULT_COLUMNS)
    try:
        for cell_idx, cell in enumerate(config.cells):
            exp_id = f"cell{cell_idx:03d}:{cell.cov_label}"
            for trial in range(config.trials):
                inst_seed = config.seed + trial
                gen = GenConfig(
                    p=cell.p, n=cell.n, k=cell.k, sigma=cell.sigma, seed=inst_seed,
                    covariance=cell.covariance, beta_range=config.beta_range,
                    signs=config.signs,
                )
                inst = generate(gen)
                for spec in config.regressors:
                    start = time.perf_counter()
                    try:
                        cfg = PathConfig(c=config.c_values[0],
                                         delta_mode=config.delta_mode,
                                         sigma_denominator=config.sigma_denominator)
                        selections, _ = run_path_for_c_grid(spec, inst, config.c_values, cfg)
                        results = []
                        for sel in selections:
                            beta_hat = restricted_ls(sel.support, inst)
                            results.append((sel, compute_metrics(sel.support, beta_hat, inst)))
                        elapsed = time.perf_counter() - start
                        for c, (sel, met) in zip(config.c_values, results):
                            rows.append({
                                "experiment_id": exp_id, "seed": inst_seed,
                                "regressor": spec.kind, "c": c,
                                "n": cell.n, "p": cell.p, "k": cell.k, "sigma": cell.sigma,
                                "stop_s": sel.stop_s, "f1": met.f1,
                                "precision": met.precision, "recall": met.recall,
                                "err": met.err, "wall_time": elapsed, "status": "ok",
                            })
                    except SparsePathError as exc:
                        elapsed = time.perf_counter() - start
                        for c in config.c_values:
                            rows.append({
                                "experiment_id": exp_id, "seed": inst_seed,
                                "regressor": spec.kind, "c": c,
                                "n": cell.n, "p": cell.p, "k": cell.k, "sigma": cell.sigma,
                                "stop_s": -1, "f1": math.nan, "precision": math.nan,
                                "recall": math.nan, "err": math.nan,
                                "wall_time": elapsed,
                                "status": f"error: {type(exc).__name__}: {exc}",
                            })
                    for row in rows[len(rows) - len(config.c_values):]:
                        writer.writerow([_fmt(row[col]) for col in RESULT_COLUMNS])
                    out.flush()
                if progress is not None:
                    progress(exp_id, trial)
    finally:
        out.close()
    write_summary(rows, summary_path(config.output_path))
    return rows


def summary_path(results_path: str) -> str:
    return results_path + ".summary.csv" if not results_path.endswith(".csv") \
        else results_path[:-4] + ".summary.csv"


def write_summary(rows: list[dict], path: str):
    """Per-(cell, regressor, c) means and standard deviations of the ok rows."""
    groups: dict[tuple, list[dict]] = {}
    for row in rows:
        groups.setdefault((row["experiment_id"], row["regressor"], row["c"]), []).append(row)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SUMMARY_COLUMNS)
        for (exp_id, kind, c), members in groups.items():
            ok = [m for m in members if m["status"] == "ok"]
            first = members[0]
            record = [exp_id, kind, _fmt(c), first["n"], first["p"], first["k"],
                      _fmt(float(first["sigma"])), len(ok)]
            for metric in ("f1", "precision", "recall", "err", "stop_s"):
                vals = np.array([float(m[metric]) for m in ok]) if ok else np.array([math.nan])
                record.append(_fmt(float(np.mean(vals))))
                record.append(_fmt(float(np.std(vals))))
            writer.writerow(record)


def read_results_csv(path: str) -> list[dict]:
    """Read a results table back; numeric fields are parsed to their types."""
    out: list[dict] = []
    with open(path, "r", newline="") as fh:
        reader = csv.DictReader(fh)
        for rec in reader:
            row = dict(rec)
            for key in ("seed", "n", "p", "k", "stop_s"):
                row[key] = int(rec[key])
            for key in ("c", "sigma", "f1", "precision", "recall", "err", "wall_time"):
                row[key] = float(rec[key])
            out.append(row)
    return out
