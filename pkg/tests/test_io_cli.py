"""Serialization round trips and the command-line front end."""

import json
import subprocess
import sys

import numpy as np
import pytest

from qifsel import io
from qifsel.cli import main
from qifsel.correlation import Correlation
from qifsel.datamodel import LongitudinalDataset, expand_design
from qifsel.penalty import PenaltyKind, PenaltySpec
from qifsel.simulate import Scenario, ScenarioConfig, simulate_scenario
from qifsel.solver import newton_fit

from conftest import toy_dataset


# ------------------------------------------------------------------ CSV round trip

def test_dataset_csv_round_trip_bit_exact(tmp_path):
    data = toy_dataset(n=9, k=4, p=3, q=2, seed=1, missing=0.3)
    path = tmp_path / "d.csv"
    io.write_dataset_csv(data, path)
    back = io.read_dataset_csv(path)
    np.testing.assert_array_equal(back.observed, data.observed)
    np.testing.assert_array_equal(back.gen, data.gen)
    np.testing.assert_array_equal(back.response[back.observed],
                                  data.response[data.observed])
    np.testing.assert_array_equal(back.env[back.observed],
                                  data.env[data.observed])


def test_dataset_csv_error_cases(tmp_path):
    path = tmp_path / "bad.csv"

    path.write_text("subject,y,time\n")
    with pytest.raises(ValueError, match="subject,time,y"):
        io.read_dataset_csv(path)

    path.write_text("subject,time,y,e1,x1\n")
    with pytest.raises(ValueError, match="no data rows"):
        io.read_dataset_csv(path)

    path.write_text("subject,time,y,x1\n1,1,0.5,1.0\n1,1,0.6,1.0\n")
    with pytest.raises(ValueError, match="duplicate"):
        io.read_dataset_csv(path)

    path.write_text("subject,time,y,x1\n1,0,0.5,1.0\n")
    with pytest.raises(ValueError, match="time labels"):
        io.read_dataset_csv(path)

    path.write_text("subject,time,y,x1\n1,1,0.5,1.0\n1,2,0.6,2.0\n")
    with pytest.raises(ValueError, match="genetic columns vary"):
        io.read_dataset_csv(path)


# ----------------------------------------------------------------- JSON artifacts

def test_truth_json_round_trip(tmp_path):
    cfg = ScenarioConfig(scenario=Scenario.LD_SNP, n=20, k=3, p=8, q=2, n_true=5)
    truth = simulate_scenario(cfg, seed=2)
    path = tmp_path / "truth.json"
    io.write_truth_json(truth, path)

    raw = json.loads(path.read_text())
    assert min(raw["true_main"]) >= 1                    # 1-based on disk
    assert max(v for v, _ in raw["true_inter"]) <= cfg.p
    assert raw["config"]["scenario"] == "ld-snp"

    back = io.read_truth_json(path)
    np.testing.assert_array_equal(back.beta_true, truth.beta_true)
    assert back.true_main == truth.true_main
    assert back.true_inter == truth.true_inter
    assert back.config == cfg
    assert back.dataset is None


def test_fit_json_round_trip(tmp_path):
    data = toy_dataset(n=20, k=3, p=3, q=1, seed=3)
    design = expand_design(data)
    spec = PenaltySpec(kind=PenaltyKind.SPARSE_GROUP, lambda1=0.1, lambda2=0.05)
    fit = newton_fit(data, design, Correlation.EXCHANGEABLE, spec)
    path = tmp_path / "fit.json"
    io.write_fit_json(fit, path, context={"note": "roundtrip"})

    raw = json.loads(path.read_text())
    assert raw["context"] == {"note": "roundtrip"}
    if raw["selected_main"]:
        assert min(raw["selected_main"]) >= 1

    back = io.read_fit_json(path)
    np.testing.assert_array_equal(back.beta_hat, fit.beta_hat)
    assert back.converged == fit.converged
    assert back.iterations == fit.iterations
    assert back.final_objective == fit.final_objective
    assert back.selected_main == fit.selected_main
    assert back.selected_inter == fit.selected_inter
    assert back.trace == fit.trace


def test_error_json_shape():
    msg = json.loads(io.error_json(ValueError("boom")))
    assert msg == {"error": "ValueError", "message": "boom"}


# -------------------------------------------------------------------- CLI in-process

SIM_ARGS = ["simulate", "--scenario", "gene-expression-ar1", "--n", "14",
            "--k", "3", "--p", "4", "--q", "2", "--n-true", "4"]


def _simulate(tmp_path, capsys, seed="3", subdir="sim"):
    out = tmp_path / subdir
    rc = main(SIM_ARGS + ["--seed", seed, "--out", str(out)])
    assert rc == 0
    paths = json.loads(capsys.readouterr().out)
    return paths["dataset"], paths["truth"]


def test_cli_simulate_fit_evaluate_pipeline(tmp_path, capsys):
    data_path, truth_path = _simulate(tmp_path, capsys)

    fit_path = tmp_path / "fit.json"
    rc = main(["fit", "--data", data_path, "--lambda1", "0.05",
               "--lambda2", "0.05", "--out", str(fit_path)])
    assert rc == 0
    payload = json.loads(fit_path.read_text())
    assert len(payload["beta_hat"]) == 1 + 2 + 4 * 3
    assert payload["context"]["penalty"] == "sparse-group"

    rc = main(["evaluate", "--fit", str(fit_path), "--truth", truth_path,
               "--data", data_path])
    assert rc == 0
    scores = json.loads(capsys.readouterr().out)
    assert set(scores) == {"tp_main", "fp_main", "tp_inter", "fp_inter",
                           "tp_overall", "fp_overall", "mse"}
    assert scores["tp_overall"] <= 4
    assert scores["mse"] >= 0


def test_cli_tune_holdout_and_cv(tmp_path, capsys):
    data_path, _ = _simulate(tmp_path, capsys, seed="4", subdir="train")
    val_path, _ = _simulate(tmp_path, capsys, seed="5", subdir="val")

    rc = main(["tune", "--data", data_path, "--validation-file", val_path,
               "--grid-l1", "0.05,0.2", "--grid-l2", "0.08"])
    assert rc == 0
    holdout = json.loads(capsys.readouterr().out)
    assert holdout["mode"] == "holdout"
    assert len(holdout["cells"]) == 2
    assert holdout["best"]["mse"] == min(c["mse"] for c in holdout["cells"])
    assert "beta_hat" in holdout["fit"]

    rc = main(["tune", "--data", data_path, "--folds", "2",
               "--grid-l1", "0.1", "--grid-l2", "0.1"])
    assert rc == 0
    cv = json.loads(capsys.readouterr().out)
    assert cv["mode"] == "cv"
    assert cv["folds"] == 2
    assert cv["best"]["lambda1"] == 0.1


def test_cli_screen(tmp_path, capsys):
    data_path, _ = _simulate(tmp_path, capsys, seed="6", subdir="scr")
    out = tmp_path / "screen"
    rc = main(["screen", "--data", data_path, "--cutoff", "0.5",
               "--out", str(out)])
    assert rc == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["n_kept"] == len(payload["kept"])
    assert all(1 <= v <= 4 for v in payload["kept"])
    minp = (out / "screen_minp.csv").read_text().splitlines()
    assert minp[0] == "snp,min_p,kept"
    assert len(minp) == 1 + 4


def test_cli_run_experiment_artifacts(tmp_path, capsys):
    out = tmp_path / "exp"
    rc = main(["run-experiment", "--scenario", "gene-expression-ar1",
               "--n", "14", "--k", "3", "--p", "4", "--q", "1",
               "--n-true", "3", "--replicates", "2",
               "--penalty", "sparse-group,individual", "--corr", "exchangeable",
               "--grid-l1", "0.05,0.2", "--grid-l2", "0.08",
               "--seed", "7", "--out", str(out)])
    assert rc == 0
    text = capsys.readouterr().out
    assert "sparse-group" in text and "individual" in text

    rows = (out / "replicate_metrics.csv").read_text().splitlines()
    assert len(rows) == 1 + 2 * 2                       # header + reps x kinds

    summary = json.loads((out / "summary.json").read_text())
    assert summary["failures"] == []
    assert {v["penalty"] for v in summary["variants"]} == {"sparse-group",
                                                           "individual"}
    for variant in summary["variants"]:
        assert set(variant["metrics"]) >= {"tp_overall", "fp_overall", "mse"}
    assert summary["config"]["replicates"] == 2
    assert (out / "summary.txt").read_text().strip() != ""


def test_cli_bench(tmp_path, capsys):
    rc = main(["bench", "--scenario", "gene-expression-ar1", "--n", "14",
               "--k", "3", "--p", "4", "--q", "1", "--n-true", "3",
               "--replicates", "1", "--lambda1", "0.1", "--lambda2", "0.1",
               "--corr", "independence,exchangeable", "--seed", "8"])
    assert rc == 0
    payload = json.loads(capsys.readouterr().out)
    assert len(payload["rows"]) == 2
    for row in payload["rows"]:
        assert row["mean_seconds"] >= 0
        assert row["sd_seconds"] == 0.0                  # single replicate


def test_cli_error_payload_in_process(tmp_path, capsys):
    rc = main(["fit", "--data", str(tmp_path / "missing.csv"),
               "--lambda1", "0.1", "--lambda2", "0.1"])
    assert rc == 1
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "FileNotFoundError"


# ------------------------------------------------------------------- CLI subprocess

def test_cli_subprocess_end_to_end(tmp_path):
    out = tmp_path / "sub"
    res = subprocess.run(
        [sys.executable, "-m", "qifsel.cli", *SIM_ARGS, "--seed", "9",
         "--out", str(out)],
        capture_output=True, text=True)
    assert res.returncode == 0
    paths = json.loads(res.stdout)
    assert (out / "dataset.csv").exists()

    res = subprocess.run(
        [sys.executable, "-m", "qifsel.cli", "fit", "--data", paths["dataset"],
         "--lambda1", "0.1", "--lambda2", "0.1"],
        capture_output=True, text=True)
    assert res.returncode == 0
    assert json.loads(res.stdout)["converged"] is True

    res = subprocess.run(
        [sys.executable, "-m", "qifsel.cli", "fit", "--data",
         str(tmp_path / "nope.csv"), "--lambda1", "0.1", "--lambda2", "0.1"],
        capture_output=True, text=True)
    assert res.returncode == 1
    assert json.loads(res.stderr)["error"] == "FileNotFoundError"
