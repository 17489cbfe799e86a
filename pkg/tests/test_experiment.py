"""Replicated-experiment harness: determinism, summaries, failure capture."""

import re

import numpy as np
import pytest

import qifsel.experiment as experiment
from qifsel.correlation import Correlation
from qifsel.experiment import (BenchRow, ExperimentConfig, bench,
                               format_summary, run_experiment, run_replicate,
                               summarize)
from qifsel.penalty import PenaltyKind
from qifsel.simulate import Scenario, ScenarioConfig
from qifsel.tuning import TuningGrid

TINY = ScenarioConfig(scenario=Scenario.GENE_EXPRESSION_AR1,
                      n=12, k=2, p=3, q=1, n_true=2)
GRID = TuningGrid(lambda1_values=(0.05, 0.2), lambda2_values=(0.08,))


def tiny_config(**kw):
    base = dict(scenario=TINY, kinds=(PenaltyKind.SPARSE_GROUP,),
                structures=(Correlation.EXCHANGEABLE,), grid=GRID,
                replicates=2, seed=0)
    base.update(kw)
    return ExperimentConfig(**base)


def test_config_validation():
    with pytest.raises(ValueError):
        tiny_config(replicates=0)
    with pytest.raises(ValueError):
        tiny_config(threads=0)
    with pytest.raises(ValueError):
        tiny_config(missing_fraction=1.0)


def test_run_experiment_deterministic():
    a = run_experiment(tiny_config())
    b = run_experiment(tiny_config())
    assert a.rows == b.rows
    assert a.summary == b.summary
    assert a.failures == [] and b.failures == []


def test_rows_cover_all_variants_and_replicates():
    config = tiny_config(kinds=(PenaltyKind.SPARSE_GROUP, PenaltyKind.GROUP),
                         replicates=3)
    result = run_experiment(config)
    assert len(result.rows) == 3 * 2
    seen = {(r.replicate, r.kind) for r in result.rows}
    assert len(seen) == 6
    for row in result.rows:
        assert row.tp_overall + row.fp_overall >= 0
        assert row.mse >= 0


def test_summary_matches_hand_computation():
    result = run_experiment(tiny_config(replicates=3))
    key = (PenaltyKind.SPARSE_GROUP, Correlation.EXCHANGEABLE)
    rows = [r for r in result.rows if (r.kind, r.structure) == key]
    mses = np.array([r.mse for r in rows])
    mean, sd = result.summary[key]["mse"]
    assert mean == pytest.approx(mses.mean(), rel=1e-12)
    assert sd == pytest.approx(mses.std(ddof=1), rel=1e-12)
    assert result.summary == summarize(result.rows)


def test_single_replicate_sd_is_zero():
    result = run_experiment(tiny_config(replicates=1))
    key = (PenaltyKind.SPARSE_GROUP, Correlation.EXCHANGEABLE)
    for name, (mean, sd) in result.summary[key].items():
        assert sd == 0.0


def test_failures_recorded_not_dropped(monkeypatch):
    real = run_replicate

    def flaky(config, replicate):
        if replicate == 1:
            raise RuntimeError("synthetic replicate failure")
        return real(config, replicate)

    monkeypatch.setattr(experiment, "run_replicate", flaky)
    result = experiment.run_experiment(tiny_config(replicates=3))
    assert [r for r, _ in result.failures] == [1]
    assert "synthetic replicate failure" in result.failures[0][1]
    assert {r.replicate for r in result.rows} == {0, 2}

    text = format_summary(result)
    assert "failed replicates: 1" in text


def test_format_summary_layout():
    result = run_experiment(tiny_config())
    text = format_summary(result)
    lines = text.splitlines()
    assert lines[0].startswith("variant")
    assert "sparse-group.exchangeable" in lines[1]
    # mse cells use three digits, counts one
    assert re.search(r"\d+\.\d{3}\(\d+\.\d{3}\)", lines[1])
    assert re.search(r"\d+\.\d\(\d+\.\d\)", lines[1])


def test_missing_fraction_path_runs():
    rows = run_replicate(tiny_config(missing_fraction=0.25, replicates=1), 0)
    assert len(rows) == 1
    assert np.isfinite(rows[0].mse)
    assert rows[0].iterations >= 1


def test_multiprocess_matches_sequential():
    seq = run_experiment(tiny_config(replicates=3))
    par = run_experiment(tiny_config(replicates=3, threads=2))
    assert seq.rows == par.rows
    assert seq.summary == par.summary


def test_bench_rows():
    rows = bench(TINY, [PenaltyKind.SPARSE_GROUP],
                 [Correlation.INDEPENDENCE, Correlation.EXCHANGEABLE],
                 0.1, 0.1, replicates=2, seed=0)
    assert {(
        r.kind, r.structure) for r in rows} == {
        (PenaltyKind.SPARSE_GROUP, Correlation.INDEPENDENCE),
        (PenaltyKind.SPARSE_GROUP, Correlation.EXCHANGEABLE)}
    for row in rows:
        assert isinstance(row, BenchRow)
        assert row.mean_seconds > 0
        assert row.iterations >= 1
