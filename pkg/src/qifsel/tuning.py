"""Tuning-parameter search and selection/prediction metrics.

Both tuning routes score candidate (lambda1, lambda2) cells by prediction
error: ``grid_tune`` fits on a training set and scores on an independent
validation set, ``cross_validate`` averages held-out error over subject-level
folds (entire subjects move together so within-subject correlation never leaks
across the split).  Ties prefer the smaller lambda1, then the smaller lambda2.

Every cell starts from the same LASSO initializer computed once per training
set, so cells are independent and can be evaluated concurrently; results are
merged in cell order, which keeps the outcome schedule-independent.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from itertools import product
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .correlation import Correlation
from .datamodel import ExpandedDesign, LongitudinalDataset, expand_design, subset_subjects
from .penalty import PenaltyKind, PenaltySpec
from .qif import QifEngine
from .solver import FitResult, init_lasso, newton_fit


@dataclass(frozen=True)
class TuningGrid:
    lambda1_values: Tuple[float, ...]
    lambda2_values: Tuple[float, ...]

    def __post_init__(self):
        l1 = tuple(sorted(float(v) for v in self.lambda1_values))
        l2 = tuple(sorted(float(v) for v in self.lambda2_values))
        if not l1 or not l2:
            raise ValueError("grid axes must be non-empty")
        if l1[0] < 0 or l2[0] < 0:
            raise ValueError("tuning parameters must be non-negative")
        object.__setattr__(self, "lambda1_values", l1)
        object.__setattr__(self, "lambda2_values", l2)


def default_grid(points: int = 10, low: float = 0.01, high: float = 0.5) -> TuningGrid:
    """Log-spaced default grid for both tuning parameters."""
    vals = tuple(np.geomspace(low, high, points))
    return TuningGrid(lambda1_values=vals, lambda2_values=vals)


@dataclass
class MetricsReport:
    """Selection counts against a known truth, plus prediction error."""

    tp_main: int
    fp_main: int
    tp_inter: int
    fp_inter: int
    tp_overall: int
    fp_overall: int
    mse: float = float("nan")


@dataclass
class CellResult:
    lambda1: float
    lambda2: float
    mse: float
    fit: FitResult


@dataclass
class GridTuneResult:
    best_lambda1: float
    best_lambda2: float
    best_mse: float
    best_fit: FitResult
    cells: List[CellResult]


@dataclass
class CrossValResult:
    best_lambda1: float
    best_lambda2: float
    best_mse: float
    cell_mse: List[Tuple[float, float, float]]
    folds: int


def grid_cells(grid: TuningGrid, kind: PenaltyKind) -> List[Tuple[float, float]]:
    """Cells in scan order, collapsing the axis the penalty kind ignores."""
    if kind is PenaltyKind.GROUP:
        return [(l1, 0.0) for l1 in grid.lambda1_values]
    if kind is PenaltyKind.INDIVIDUAL:
        return [(0.0, l2) for l2 in grid.lambda2_values]
    return list(product(grid.lambda1_values, grid.lambda2_values))


def predict_mse(
    fit: Union[FitResult, np.ndarray],
    data: LongitudinalDataset,
    design: Optional[ExpandedDesign] = None,
) -> float:
    """Mean squared prediction error over the observed cells of ``data``."""
    beta = fit.beta_hat if isinstance(fit, FitResult) else np.asarray(fit, dtype=float)
    if design is None:
        design = expand_design(data)
    resid = np.where(data.observed, data.response - design.w @ beta, 0.0)
    count = int(data.observed.sum())
    if count == 0:
        raise ValueError("dataset has no observed cells")
    return float((resid * resid).sum() / count)


def tpfp(
    selected_main: Sequence[int],
    selected_inter: Sequence[Tuple[int, int]],
    true_main: Sequence[int],
    true_inter: Sequence[Tuple[int, int]],
) -> MetricsReport:
    """True/false positive counts for main effects and interactions."""
    sel_m, true_m = set(selected_main), set(true_main)
    sel_i = {tuple(t) for t in selected_inter}
    true_i = {tuple(t) for t in true_inter}
    tp_m = len(sel_m & true_m)
    fp_m = len(sel_m - true_m)
    tp_i = len(sel_i & true_i)
    fp_i = len(sel_i - true_i)
    return MetricsReport(tp_main=tp_m, fp_main=fp_m, tp_inter=tp_i, fp_inter=fp_i,
                         tp_overall=tp_m + tp_i, fp_overall=fp_m + fp_i)


def _fit_cells(
    train: LongitudinalDataset,
    design: ExpandedDesign,
    structure: Correlation,
    spec: PenaltySpec,
    cells: Sequence[Tuple[float, float]],
    beta0: np.ndarray,
    threads: int,
    fit_kwargs: dict,
) -> List[FitResult]:
    engine = QifEngine(train, design, structure)

    def one(cell):
        l1, l2 = cell
        return newton_fit(train, design, structure,
                          replace(spec, lambda1=l1, lambda2=l2),
                          beta0=beta0, engine=engine, **fit_kwargs)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(one, cells))
    return [one(c) for c in cells]


def grid_tune(
    train: LongitudinalDataset,
    validate: LongitudinalDataset,
    grid: TuningGrid,
    spec: PenaltySpec,
    structure: Correlation,
    *,
    beta0: Optional[np.ndarray] = None,
    threads: int = 1,
    **fit_kwargs,
) -> GridTuneResult:
    """Pick the grid cell minimizing validation MSE.

    ``spec`` acts as a template; its lambdas are replaced cell by cell.  The
    shared starting point ``beta0`` defaults to the LASSO initializer on the
    training set.
    """
    design = expand_design(train)
    vdesign = expand_design(validate)
    if beta0 is None:
        beta0 = init_lasso(train, design)
    cells = grid_cells(grid, spec.kind)
    fits = _fit_cells(train, design, structure, spec, cells, beta0, threads, fit_kwargs)

    results: List[CellResult] = []
    best: Optional[CellResult] = None
    for (l1, l2), fit in zip(cells, fits):
        cell = CellResult(l1, l2, predict_mse(fit, validate, vdesign), fit)
        results.append(cell)
        if best is None or cell.mse < best.mse:
            best = cell
    return GridTuneResult(best_lambda1=best.lambda1, best_lambda2=best.lambda2,
                          best_mse=best.mse, best_fit=best.fit, cells=results)


def subject_folds(n: int, folds: int) -> np.ndarray:
    """Contiguous fold labels for n subjects, sizes differing by at most one."""
    if not 2 <= folds <= n:
        raise ValueError(f"folds must be in [2, {n}], got {folds}")
    labels = np.empty(n, dtype=int)
    for f, chunk in enumerate(np.array_split(np.arange(n), folds)):
        labels[chunk] = f
    return labels


def cross_validate(
    data: LongitudinalDataset,
    grid: TuningGrid,
    spec: PenaltySpec,
    structure: Correlation,
    *,
    folds: int = 5,
    fold_ids: Optional[np.ndarray] = None,
    threads: int = 1,
    **fit_kwargs,
) -> CrossValResult:
    """Subject-level k-fold choice of (lambda1, lambda2).

    Every cell's score is the unweighted mean of per-fold held-out MSEs; the
    same tie rule as ``grid_tune`` applies.
    """
    n = data.n_subjects
    if fold_ids is None:
        fold_ids = subject_folds(n, folds)
    else:
        fold_ids = np.asarray(fold_ids, dtype=int)
        if fold_ids.shape != (n,):
            raise ValueError("fold_ids must have one label per subject")
    labels = np.unique(fold_ids)
    cells = grid_cells(grid, spec.kind)
    scores = np.zeros(len(cells))

    for lab in labels:
        hold = np.nonzero(fold_ids == lab)[0]
        keep = np.nonzero(fold_ids != lab)[0]
        train = subset_subjects(data, keep)
        test = subset_subjects(data, hold)
        design = expand_design(train)
        tdesign = expand_design(test)
        beta0 = init_lasso(train, design)
        fits = _fit_cells(train, design, structure, spec, cells, beta0, threads, fit_kwargs)
        for c, fit in enumerate(fits):
            scores[c] += predict_mse(fit, test, tdesign)
    scores /= labels.size

    best = int(np.argmin(scores))          # first minimum wins ties
    table = [(l1, l2, float(s)) for (l1, l2), s in zip(cells, scores)]
    return CrossValResult(best_lambda1=cells[best][0], best_lambda2=cells[best][1],
                          best_mse=float(scores[best]), cell_mse=table,
                          folds=int(labels.size))
