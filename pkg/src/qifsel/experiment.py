"""Replicated experiments: generate, tune, fit, score, summarize.

One replicate draws a training set and an independent validation set sharing
the same true coefficients, tunes every requested method variant (penalty kind
by working structure) on the grid, and scores the tuned fit's selection counts
and validation MSE against the generating truth.  Replicates are independent
and seeded from the master seed by replicate index, so results do not depend
on scheduling or worker count.  Failures inside a replicate are recorded and
excluded from summaries, never silently dropped.

Summaries report mean(sd) per variant in the usual table style.  ``bench``
times the Newton stage alone at fixed tuning parameters.
"""

from __future__ import annotations

import time
import traceback
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .correlation import Correlation
from .datamodel import expand_design
from .penalty import PenaltyKind, PenaltySpec
from .qif import QifEngine
from .simulate import (
    ScenarioConfig,
    delete_observations,
    replicate_seed,
    simulate_scenario,
    simulate_validation,
)
from .solver import init_lasso, newton_fit
from .tuning import TuningGrid, default_grid, grid_tune, tpfp


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: ScenarioConfig = ScenarioConfig()
    kinds: Tuple[PenaltyKind, ...] = (
        PenaltyKind.SPARSE_GROUP,
        PenaltyKind.GROUP,
        PenaltyKind.INDIVIDUAL,
    )
    structures: Tuple[Correlation, ...] = (Correlation.EXCHANGEABLE,)
    grid: TuningGrid = field(default_factory=default_grid)
    replicates: int = 10
    seed: int = 0
    gamma: float = 3.0
    threshold: float = 1e-3
    max_iter: int = 200
    tol: float = 1e-3
    missing_fraction: float = 0.0      # optional random deletion of time points
    threads: int = 1

    def __post_init__(self):
        if self.replicates < 1:
            raise ValueError("replicates must be positive")
        if self.threads < 1:
            raise ValueError("threads must be positive")
        if not 0.0 <= self.missing_fraction < 1.0:
            raise ValueError("missing_fraction must lie in [0, 1)")


@dataclass
class VariantResult:
    replicate: int
    kind: PenaltyKind
    structure: Correlation
    lambda1: float
    lambda2: float
    tp_main: int
    fp_main: int
    tp_inter: int
    fp_inter: int
    tp_overall: int
    fp_overall: int
    mse: float
    iterations: int
    converged: bool


@dataclass
class ExperimentResult:
    rows: List[VariantResult]
    failures: List[Tuple[int, str]]
    summary: Dict[Tuple[PenaltyKind, Correlation], Dict[str, Tuple[float, float]]]


def _limit_blas(threads: int) -> None:
    # Worker processes share cores; stop the BLAS pools from oversubscribing.
    try:
        from threadpoolctl import threadpool_limits

        threadpool_limits(limits=threads)
    except ImportError:
        pass


def run_replicate(config: ExperimentConfig, replicate: int) -> List[VariantResult]:
    """All variant results for one replicate (exported for worker processes)."""
    truth = simulate_scenario(config.scenario, replicate_seed(config.seed, replicate, 0))
    train = truth.dataset
    validate = simulate_validation(truth, replicate_seed(config.seed, replicate, 1))
    if config.missing_fraction > 0.0:
        train = delete_observations(train, config.missing_fraction,
                                    replicate_seed(config.seed, replicate, 2))

    design = expand_design(train)
    beta0 = init_lasso(train, design)
    out: List[VariantResult] = []
    for structure in config.structures:
        for kind in config.kinds:
            spec = PenaltySpec(kind=kind, lambda1=0.0, lambda2=0.0, gamma=config.gamma)
            tuned = grid_tune(
                train, validate, config.grid, spec, structure,
                beta0=beta0,
                max_iter=config.max_iter, tol=config.tol, threshold=config.threshold,
            )
            fit = tuned.best_fit
            report = tpfp(fit.selected_main, fit.selected_inter,
                          truth.true_main, truth.true_inter)
            out.append(VariantResult(
                replicate=replicate, kind=kind, structure=structure,
                lambda1=tuned.best_lambda1, lambda2=tuned.best_lambda2,
                tp_main=report.tp_main, fp_main=report.fp_main,
                tp_inter=report.tp_inter, fp_inter=report.fp_inter,
                tp_overall=report.tp_overall, fp_overall=report.fp_overall,
                mse=tuned.best_mse, iterations=fit.iterations,
                converged=fit.converged,
            ))
    return out


def _worker(args):
    config, replicate = args
    _limit_blas(1)
    return replicate, run_replicate(config, replicate)


METRIC_FIELDS = ("tp_main", "fp_main", "tp_inter", "fp_inter",
                 "tp_overall", "fp_overall", "mse")


def _mean_sd(values: Sequence[float]) -> Tuple[float, float]:
    arr = np.asarray(values, dtype=float)
    sd = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    return float(arr.mean()), sd


def summarize(rows: Sequence[VariantResult]) -> Dict:
    out: Dict = {}
    for row in rows:
        out.setdefault((row.kind, row.structure), []).append(row)
    summary = {}
    for key, group in out.items():
        summary[key] = {
            name: _mean_sd([getattr(r, name) for r in group]) for name in METRIC_FIELDS
        }
    return summary


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Run all replicates, in-process or across worker processes."""
    rows: List[VariantResult] = []
    failures: List[Tuple[int, str]] = []
    if config.threads > 1:
        with ProcessPoolExecutor(max_workers=config.threads) as pool:
            futures = {pool.submit(_worker, (config, r)): r
                       for r in range(config.replicates)}
            for fut in as_completed(futures):
                r = futures[fut]
                try:
                    _, result = fut.result()
                    rows.extend(result)
                except Exception:
                    failures.append((r, traceback.format_exc()))
    else:
        for r in range(config.replicates):
            try:
                rows.extend(run_replicate(config, r))
            except Exception:
                failures.append((r, traceback.format_exc()))
    failures.sort(key=lambda f: f[0])
    rows.sort(key=lambda v: (v.replicate, v.structure.value, v.kind.value))
    return ExperimentResult(rows=rows, failures=failures, summary=summarize(rows))


def format_summary(result: ExperimentResult) -> str:
    """Plain-text mean(sd) table, one row per method variant."""
    lines = []
    header = f"{'variant':<28}" + "".join(f"{name:>14}" for name in METRIC_FIELDS)
    lines.append(header)
    for (kind, structure), stats in sorted(
        result.summary.items(), key=lambda kv: (kv[0][1].value, kv[0][0].value)
    ):
        label = f"{kind.value}.{structure.value}"
        cells = []
        for name in METRIC_FIELDS:
            mean, sd = stats[name]
            digits = 3 if name == "mse" else 1
            cells.append(f"{mean:.{digits}f}({sd:.{digits}f})")
        lines.append(f"{label:<28}" + "".join(f"{c:>14}" for c in cells))
    if result.failures:
        lines.append(f"failed replicates: {len(result.failures)}")
    return "\n".join(lines)


@dataclass
class BenchRow:
    kind: PenaltyKind
    structure: Correlation
    mean_seconds: float
    sd_seconds: float
    iterations: float


def bench(
    scenario: ScenarioConfig,
    kinds: Sequence[PenaltyKind],
    structures: Sequence[Correlation],
    lambda1: float,
    lambda2: float,
    *,
    replicates: int = 3,
    seed: int = 0,
    gamma: float = 3.0,
    max_iter: int = 200,
    tol: float = 1e-3,
) -> List[BenchRow]:
    """Wall-clock of the Newton stage at fixed tunings, initializer excluded."""
    _limit_blas(1)                 # comparable timings need one BLAS thread
    samples: Dict[Tuple[PenaltyKind, Correlation], List[Tuple[float, int]]] = {}
    for r in range(replicates):
        truth = simulate_scenario(scenario, replicate_seed(seed, r, 0))
        design = expand_design(truth.dataset)
        beta0 = init_lasso(truth.dataset, design)
        for structure in structures:
            engine = QifEngine(truth.dataset, design, structure)
            for kind in kinds:
                spec = PenaltySpec(kind=kind, lambda1=lambda1, lambda2=lambda2, gamma=gamma)
                start = time.perf_counter()
                fit = newton_fit(truth.dataset, design, structure, spec, beta0=beta0,
                                 engine=engine, max_iter=max_iter, tol=tol)
                elapsed = time.perf_counter() - start
                samples.setdefault((kind, structure), []).append((elapsed, fit.iterations))
    out = []
    for (kind, structure), vals in samples.items():
        times = [t for t, _ in vals]
        mean, sd = _mean_sd(times)
        iters = float(np.mean([i for _, i in vals]))
        out.append(BenchRow(kind=kind, structure=structure,
                            mean_seconds=mean, sd_seconds=sd, iterations=iters))
    return out
