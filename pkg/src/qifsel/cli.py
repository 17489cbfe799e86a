"""Command-line front end.

Subcommands: ``simulate``, ``fit``, ``tune``, ``screen``, ``evaluate``,
``run-experiment``, ``bench``.  Every command accepts ``--seed``,
``--threads``, and ``--out``; results go to stdout as JSON unless ``--out``
names a file or directory.  Failures print a machine-readable error JSON to
stderr and exit nonzero.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import io
from .correlation import Correlation
from .datamodel import expand_design
from .experiment import (
    ExperimentConfig,
    ExperimentResult,
    METRIC_FIELDS,
    bench,
    format_summary,
    run_experiment,
)
from .penalty import PenaltyKind, PenaltySpec
from .screen import marginal_screen
from .simulate import Scenario, ScenarioConfig, simulate_scenario
from .solver import newton_fit
from .tuning import TuningGrid, cross_validate, default_grid, grid_tune, predict_mse, tpfp

_SCENARIOS = [s.value for s in Scenario]
_PENALTIES = [k.value for k in PenaltyKind]
_CORRS = [c.value for c in Correlation]


def _parse_floats(text: str) -> tuple:
    try:
        return tuple(float(tok) for tok in text.split(",") if tok.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated floats, got {text!r}")


def _emit(payload: dict, out: Optional[str]) -> None:
    if out:
        io.write_json(payload, out)
    else:
        json.dump(payload, sys.stdout, indent=1)
        sys.stdout.write("\n")


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--out", type=str, default=None,
                        help="output file, or directory for multi-file commands")


def _scenario_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--scenario", choices=_SCENARIOS, default=_SCENARIOS[0])
    parser.add_argument("--n", type=int, default=400, help="subjects")
    parser.add_argument("--k", type=int, default=5, help="time points")
    parser.add_argument("--p", type=int, default=200, help="genetic factors")
    parser.add_argument("--q", type=int, default=5, help="environment factors")
    parser.add_argument("--rho-x", type=float, default=0.8)
    parser.add_argument("--tau", type=float, default=0.8)
    parser.add_argument("--maf", type=float, default=0.3)
    parser.add_argument("--ld-r", type=float, default=0.3)
    parser.add_argument("--n-true", type=int, default=25)
    parser.add_argument("--coef-low", type=float, default=0.3)
    parser.add_argument("--coef-high", type=float, default=0.7)
    parser.add_argument("--error-scale", type=float, default=1.0)


def _fit_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--penalty", choices=_PENALTIES, default="sparse-group")
    parser.add_argument("--corr", choices=_CORRS, default="exchangeable")
    parser.add_argument("--gamma", type=float, default=3.0)
    parser.add_argument("--max-iter", type=int, default=200)
    parser.add_argument("--tol", type=float, default=1e-3)
    parser.add_argument("--threshold", type=float, default=1e-3)


def _scenario_config(args: argparse.Namespace) -> ScenarioConfig:
    return ScenarioConfig(
        scenario=Scenario.from_name(args.scenario),
        n=args.n, k=args.k, p=args.p, q=args.q,
        rho_x=args.rho_x, tau=args.tau, maf=args.maf, ld_r=args.ld_r,
        n_true=args.n_true, coef_low=args.coef_low, coef_high=args.coef_high,
        error_scale=args.error_scale, seed=args.seed,
    )


def _grid(args: argparse.Namespace) -> TuningGrid:
    base = default_grid()
    l1 = args.grid_l1 if args.grid_l1 else base.lambda1_values
    l2 = args.grid_l2 if args.grid_l2 else base.lambda2_values
    return TuningGrid(lambda1_values=l1, lambda2_values=l2)


def _cmd_simulate(args: argparse.Namespace) -> int:
    config = _scenario_config(args)
    truth = simulate_scenario(config)
    out_dir = Path(args.out or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    data_path = out_dir / "dataset.csv"
    truth_path = out_dir / "truth.json"
    io.write_dataset_csv(truth.dataset, data_path)
    io.write_truth_json(truth, truth_path)
    json.dump({"dataset": str(data_path), "truth": str(truth_path),
               "n": config.n, "k": config.k, "p": config.p, "q": config.q},
              sys.stdout, indent=1)
    sys.stdout.write("\n")
    return 0


def _cmd_fit(args: argparse.Namespace) -> int:
    data = io.read_dataset_csv(args.data)
    spec = PenaltySpec(kind=PenaltyKind.from_name(args.penalty),
                       lambda1=args.lambda1, lambda2=args.lambda2, gamma=args.gamma)
    fit = newton_fit(data, expand_design(data), Correlation.from_name(args.corr), spec,
                     max_iter=args.max_iter, tol=args.tol, threshold=args.threshold)
    context = {"penalty": args.penalty, "corr": args.corr,
               "lambda1": args.lambda1, "lambda2": args.lambda2,
               "gamma": args.gamma, "data": str(args.data), "seed": args.seed}
    _emit(io.fit_to_dict(fit, context), args.out)
    return 0


def _cmd_tune(args: argparse.Namespace) -> int:
    data = io.read_dataset_csv(args.data)
    grid = _grid(args)
    spec = PenaltySpec(kind=PenaltyKind.from_name(args.penalty),
                       lambda1=0.0, lambda2=0.0, gamma=args.gamma)
    structure = Correlation.from_name(args.corr)
    fit_kwargs = dict(max_iter=args.max_iter, tol=args.tol, threshold=args.threshold)
    payload: dict = {
        "penalty": args.penalty, "corr": args.corr, "seed": args.seed,
        "grid_l1": list(grid.lambda1_values), "grid_l2": list(grid.lambda2_values),
    }
    if args.validation_file:
        validate = io.read_dataset_csv(args.validation_file)
        tuned = grid_tune(data, validate, grid, spec, structure,
                          threads=args.threads, **fit_kwargs)
        payload["mode"] = "holdout"
        payload["cells"] = [
            {"lambda1": c.lambda1, "lambda2": c.lambda2, "mse": c.mse}
            for c in tuned.cells
        ]
        payload["best"] = {"lambda1": tuned.best_lambda1, "lambda2": tuned.best_lambda2,
                           "mse": tuned.best_mse}
        payload["fit"] = io.fit_to_dict(tuned.best_fit)
    else:
        tuned = cross_validate(data, grid, spec, structure, folds=args.folds,
                               threads=args.threads, **fit_kwargs)
        payload["mode"] = "cv"
        payload["folds"] = tuned.folds
        payload["cells"] = [
            {"lambda1": l1, "lambda2": l2, "mse": mse}
            for l1, l2, mse in tuned.cell_mse
        ]
        payload["best"] = {"lambda1": tuned.best_lambda1, "lambda2": tuned.best_lambda2,
                           "mse": tuned.best_mse}
    _emit(payload, args.out)
    return 0


def _cmd_screen(args: argparse.Namespace) -> int:
    data = io.read_dataset_csv(args.data)
    report = marginal_screen(data, cutoff=args.cutoff)
    payload = {"cutoff": report.cutoff,
               "kept": [int(v) + 1 for v in report.kept],
               "n_kept": int(report.kept.size)}
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        csv_path = out_dir / "screen_minp.csv"
        with open(csv_path, "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["snp", "min_p", "kept"])
            kept = set(int(v) for v in report.kept)
            for v, min_p in enumerate(report.min_p):
                writer.writerow([v + 1, repr(float(min_p)), int(v in kept)])
        payload["minp_csv"] = str(csv_path)
    json.dump(payload, sys.stdout, indent=1)
    sys.stdout.write("\n")
    return 0


def _cmd_evaluate(args: argparse.Namespace) -> int:
    fit = io.read_fit_json(args.fit)
    truth = io.read_truth_json(args.truth)
    report = tpfp(fit.selected_main, fit.selected_inter,
                  truth.true_main, truth.true_inter)
    payload = {
        "tp_main": report.tp_main, "fp_main": report.fp_main,
        "tp_inter": report.tp_inter, "fp_inter": report.fp_inter,
        "tp_overall": report.tp_overall, "fp_overall": report.fp_overall,
    }
    if args.data:
        data = io.read_dataset_csv(args.data)
        payload["mse"] = predict_mse(fit, data)
    _emit(payload, args.out)
    return 0


def _experiment_artifacts(result: ExperimentResult, config: ExperimentConfig,
                          out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "replicate_metrics.csv", "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["replicate", "penalty", "corr", "lambda1", "lambda2",
                         *METRIC_FIELDS, "iterations", "converged"])
        for row in result.rows:
            writer.writerow([
                row.replicate, row.kind.value, row.structure.value,
                repr(row.lambda1), repr(row.lambda2),
                *[getattr(row, name) for name in METRIC_FIELDS[:-1]],
                repr(row.mse), row.iterations, int(row.converged),
            ])
    summary = {
        "variants": [
            {"penalty": kind.value, "corr": structure.value,
             "metrics": {name: {"mean": mean, "sd": sd}
                         for name, (mean, sd) in stats.items()}}
            for (kind, structure), stats in sorted(
                result.summary.items(),
                key=lambda kv: (kv[0][1].value, kv[0][0].value))
        ],
        "failures": [{"replicate": r, "trace": t} for r, t in result.failures],
        "config": _experiment_config_dict(config),
    }
    io.write_json(summary, out_dir / "summary.json")
    (out_dir / "summary.txt").write_text(format_summary(result) + "\n")


def _experiment_config_dict(config: ExperimentConfig) -> dict:
    return {
        "scenario": io._config_to_dict(config.scenario),
        "penalties": [k.value for k in config.kinds],
        "corr": [c.value for c in config.structures],
        "grid_l1": list(config.grid.lambda1_values),
        "grid_l2": list(config.grid.lambda2_values),
        "replicates": config.replicates,
        "seed": config.seed,
        "gamma": config.gamma,
        "threshold": config.threshold,
        "max_iter": config.max_iter,
        "tol": config.tol,
        "missing_fraction": config.missing_fraction,
        "threads": config.threads,
    }


def _cmd_run_experiment(args: argparse.Namespace) -> int:
    kinds = tuple(PenaltyKind.from_name(tok) for tok in args.penalty.split(","))
    structures = tuple(Correlation.from_name(tok) for tok in args.corr.split(","))
    config = ExperimentConfig(
        scenario=_scenario_config(args), kinds=kinds, structures=structures,
        grid=_grid(args), replicates=args.replicates, seed=args.seed,
        gamma=args.gamma, threshold=args.threshold, max_iter=args.max_iter,
        tol=args.tol, missing_fraction=args.missing_fraction, threads=args.threads,
    )
    result = run_experiment(config)
    if args.out:
        _experiment_artifacts(result, config, Path(args.out))
    sys.stdout.write(format_summary(result) + "\n")
    return 1 if result.failures and not result.rows else 0


def _cmd_bench(args: argparse.Namespace) -> int:
    kinds = [PenaltyKind.from_name(tok) for tok in args.penalty.split(",")]
    structures = [Correlation.from_name(tok) for tok in args.corr.split(",")]
    rows = bench(_scenario_config(args), kinds, structures,
                 args.lambda1, args.lambda2,
                 replicates=args.replicates, seed=args.seed, gamma=args.gamma,
                 max_iter=args.max_iter, tol=args.tol)
    payload = {"rows": [
        {"penalty": r.kind.value, "corr": r.structure.value,
         "mean_seconds": r.mean_seconds, "sd_seconds": r.sd_seconds,
         "iterations": r.iterations}
        for r in rows
    ]}
    _emit(payload, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qifsel",
        description="Bi-level penalized selection for longitudinal "
                    "gene-environment interaction models.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="write a simulated dataset and its truth")
    _scenario_flags(p_sim)
    _common(p_sim)
    p_sim.set_defaults(func=_cmd_simulate)

    p_fit = sub.add_parser("fit", help="fit one penalized model")
    p_fit.add_argument("--data", required=True, help="dataset CSV")
    p_fit.add_argument("--lambda1", type=float, required=True)
    p_fit.add_argument("--lambda2", type=float, required=True)
    _fit_flags(p_fit)
    _common(p_fit)
    p_fit.set_defaults(func=_cmd_fit)

    p_tune = sub.add_parser("tune", help="grid search over tuning parameters")
    p_tune.add_argument("--data", required=True)
    p_tune.add_argument("--validation-file", default=None,
                        help="holdout dataset CSV; omitted means cross-validation")
    p_tune.add_argument("--folds", type=int, default=5)
    p_tune.add_argument("--grid-l1", type=_parse_floats, default=None)
    p_tune.add_argument("--grid-l2", type=_parse_floats, default=None)
    _fit_flags(p_tune)
    _common(p_tune)
    p_tune.set_defaults(func=_cmd_tune)

    p_screen = sub.add_parser("screen", help="marginal prescreening of genetic factors")
    p_screen.add_argument("--data", required=True)
    p_screen.add_argument("--cutoff", type=float, default=0.005)
    _common(p_screen)
    p_screen.set_defaults(func=_cmd_screen)

    p_eval = sub.add_parser("evaluate", help="score a fit against a known truth")
    p_eval.add_argument("--fit", required=True, help="fit JSON")
    p_eval.add_argument("--truth", required=True, help="truth JSON")
    p_eval.add_argument("--data", default=None,
                        help="dataset CSV for prediction error")
    _common(p_eval)
    p_eval.set_defaults(func=_cmd_evaluate)

    p_exp = sub.add_parser("run-experiment", help="replicated tuning and scoring")
    _scenario_flags(p_exp)
    p_exp.add_argument("--replicates", type=int, default=10)
    p_exp.add_argument("--penalty", default="sparse-group,group,individual",
                       help="comma-separated penalty kinds")
    p_exp.add_argument("--corr", default="exchangeable",
                       help="comma-separated working structures")
    p_exp.add_argument("--grid-l1", type=_parse_floats, default=None)
    p_exp.add_argument("--grid-l2", type=_parse_floats, default=None)
    p_exp.add_argument("--gamma", type=float, default=3.0)
    p_exp.add_argument("--max-iter", type=int, default=200)
    p_exp.add_argument("--tol", type=float, default=1e-3)
    p_exp.add_argument("--threshold", type=float, default=1e-3)
    p_exp.add_argument("--missing-fraction", type=float, default=0.0)
    _common(p_exp)
    p_exp.set_defaults(func=_cmd_run_experiment)

    p_bench = sub.add_parser("bench", help="time the fitting stage at fixed tunings")
    _scenario_flags(p_bench)
    p_bench.add_argument("--lambda1", type=float, default=0.1)
    p_bench.add_argument("--lambda2", type=float, default=0.1)
    p_bench.add_argument("--penalty", default="sparse-group")
    p_bench.add_argument("--corr", default="independence,exchangeable")
    p_bench.add_argument("--gamma", type=float, default=3.0)
    p_bench.add_argument("--max-iter", type=int, default=200)
    p_bench.add_argument("--tol", type=float, default=1e-3)
    p_bench.add_argument("--replicates", type=int, default=3)
    _common(p_bench)
    p_bench.set_defaults(func=_cmd_bench)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:
        sys.stderr.write(io.error_json(exc) + "\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
