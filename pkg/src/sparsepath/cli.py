"""Command-line front end.

Subcommands: select, path, experiment, scaled-lasso.  Design matrices and
responses come in as CSV (one row per observation, optional single header
line); columns are normalized on ingestion.  All indices are 0-based
internally and printed 1-based.
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional

import numpy as np

from . import __version__
from .datagen import instance_from_raw, load_matrix_csv, load_vector_csv
from .errors import NoCandidates, SparsePathError, ZeroResidual
from .experiment import load_config, run_experiment, summary_path
from .regressors import LassoGrid, RegressorSpec, entry_for_support, solution_path
from .scaled_lasso import lambda0_from_c, scaled_lasso
from .threshold import PathConfig, delta, run_path


def _fmt(value: float) -> str:
    return "%.17g" % value


def _load_instance(x_path: str, y_path: str):
    X = load_matrix_csv(x_path)
    y = load_vector_csv(y_path)
    if X.shape[0] != y.shape[0]:
        raise ValueError(
            f"shape mismatch: {x_path} has {X.shape[0]} rows, {y_path} has {y.shape[0]}"
        )
    inst, scales = instance_from_raw(X, y)
    return inst, scales


def _spec_from_args(args) -> RegressorSpec:
    if args.regressor == "foba":
        return RegressorSpec.foba(args.foba_backward_ratio)
    if args.regressor == "lasso":
        return RegressorSpec("lasso", lasso_grid=LassoGrid(args.lasso_num_points, args.lasso_decay))
    return RegressorSpec(args.regressor)


def _path_config(args) -> PathConfig:
    return PathConfig(c=args.c, delta_mode=args.delta_mode,
                      sigma_denominator=args.sigma_denominator)


def _emit(text: str, out: Optional[str]):
    sys.stdout.write(text)
    if out:
        with open(out, "w") as fh:
            fh.write(text)


def _support_1based(support) -> str:
    return " ".join(str(j + 1) for j in support.sorted())


def _coefficient_lines(support, coefficients) -> list[str]:
    return [f"{j + 1} {_fmt(coefficients[j])}" for j in support.sorted()]


def cmd_select(args) -> int:
    inst, _ = _load_instance(args.x_csv, args.y_csv)
    cfg = _path_config(args)
    selection, _ = run_path(_spec_from_args(args), inst, cfg)
    denom = inst.n if cfg.sigma_denominator == "n" else max(inst.n - selection.stop_s, 1)
    entry = entry_for_support(inst, selection.support)
    lines = [
        f"regressor: {args.regressor}",
        f"c: {_fmt(args.c)}",
        f"delta_mode: {cfg.delta_mode}",
        f"sigma_denominator: {cfg.sigma_denominator}",
        f"n: {inst.n}",
        f"p: {inst.p}",
        f"stop_s: {selection.stop_s}",
        f"stop_reason: {selection.stop_reason}",
        f"sigma2_hat: {_fmt(entry.loss / denom)}",
        f"delta_at_stop: {_fmt(selection.delta_at_stop)}",
        f"threshold_at_stop: {_fmt(selection.threshold_at_stop)}",
        f"support: {_support_1based(selection.support)}",
        "coefficients:",
        *_coefficient_lines(selection.support, entry.coefficients),
    ]
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def cmd_path(args) -> int:
    inst, _ = _load_instance(args.x_csv, args.y_csv)
    path = solution_path(_spec_from_args(args), inst, args.s_max)
    rows = ["s,loss,sigma2_hat,delta,support"]
    for entry in path.entries:
        try:
            d = _fmt(delta(entry, inst, args.delta_mode)) if entry.s < inst.max_support else ""
        except NoCandidates:
            d = ""
        rows.append(",".join([
            str(entry.s), _fmt(entry.loss), _fmt(entry.sigma2_hat), d,
            _support_1based(entry.support),
        ]))
    _emit("\n".join(rows) + "\n", args.out)
    return 0


def cmd_experiment(args) -> int:
    config = load_config(args.config)
    if args.seed is not None:
        config.seed = args.seed
    if args.out is not None:
        config.output_path = args.out

    def progress(exp_id, trial):
        sys.stderr.write(f"{exp_id} trial {trial} done\n")

    run_experiment(config, progress=progress if args.verbose else None)
    sys.stdout.write(f"results: {config.output_path}\n")
    sys.stdout.write(f"summary: {summary_path(config.output_path)}\n")
    return 0


def cmd_scaled_lasso(args) -> int:
    inst, _ = _load_instance(args.x_csv, args.y_csv)
    if args.lambda0 is None and args.c is None:
        raise ValueError("provide --lambda0 or --c")
    lambda0 = args.lambda0 if args.lambda0 is not None else lambda0_from_c(args.c, inst.n, inst.p)
    lines = [f"lambda0: {_fmt(lambda0)}", f"n: {inst.n}", f"p: {inst.p}"]
    try:
        result = scaled_lasso(inst, lambda0)
    except ZeroResidual as exc:
        lines += [f"status: zero_residual", f"detail: {exc}"]
        _emit("\n".join(lines) + "\n", args.out)
        return 0
    support = tuple(int(j) for j in np.flatnonzero(result.beta_hat))
    lines += [
        "status: ok",
        f"sigma_hat: {_fmt(result.sigma_hat)}",
        f"lam: {_fmt(result.lam)}",
        f"iterations: {result.iterations}",
        f"converged: {str(result.converged).lower()}",
        f"support: {' '.join(str(j + 1) for j in support)}",
        "coefficients:",
        *[f"{j + 1} {_fmt(result.beta_hat[j])}" for j in support],
    ]
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def _add_data_args(parser):
    parser.add_argument("x_csv", help="design matrix CSV, one row per observation")
    parser.add_argument("y_csv", help="response CSV, single column")


def _add_regressor_args(parser):
    parser.add_argument("--regressor", choices=["omp", "foba", "marginal", "lasso"],
                        default="omp")
    parser.add_argument("--foba-backward-ratio", type=float, default=0.5)
    parser.add_argument("--lasso-num-points", type=int, default=100)
    parser.add_argument("--lasso-decay", type=float, default=None)
    parser.add_argument("--delta-mode", choices=["ratio", "correlation"], default="ratio")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sparsepath",
        description="Tuning-free sparse regression via solution-path thresholding.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_select = sub.add_parser("select", help="run the stopping rule and report the support")
    _add_data_args(p_select)
    _add_regressor_args(p_select)
    p_select.add_argument("--c", type=float, default=1.0)
    p_select.add_argument("--sigma-denominator", choices=["n", "n-s"], default="n")
    p_select.add_argument("--out", default=None)
    p_select.set_defaults(func=cmd_select)

    p_path = sub.add_parser("path", help="dump the full solution path as CSV")
    _add_data_args(p_path)
    _add_regressor_args(p_path)
    p_path.add_argument("--s-max", type=int, default=None)
    p_path.add_argument("--out", default=None)
    p_path.set_defaults(func=cmd_path)

    p_exp = sub.add_parser("experiment", help="run a seeded Monte-Carlo sweep from a config file")
    p_exp.add_argument("config", help="flat key=value config file")
    p_exp.add_argument("--seed", type=int, default=None, help="override the config seed")
    p_exp.add_argument("--out", default=None, help="override the config output path")
    p_exp.add_argument("--verbose", action="store_true")
    p_exp.set_defaults(func=cmd_experiment)

    p_sl = sub.add_parser("scaled-lasso", help="jointly estimate coefficients and noise scale")
    _add_data_args(p_sl)
    group = p_sl.add_mutually_exclusive_group(required=True)
    group.add_argument("--lambda0", type=float, default=None)
    group.add_argument("--c", type=float, default=None)
    p_sl.add_argument("--out", default=None)
    p_sl.set_defaults(func=cmd_scaled_lasso)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (SparsePathError, ValueError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
