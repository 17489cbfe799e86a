"""File formats: long CSV datasets, truth sidecars, fit and report JSON.

The dataset CSV is long format with header ``subject,time,y,e1..eq,x1..xp``;
missing time points are absent rows.  Floats are written with ``repr`` so a
write/read cycle reproduces every finite value bit for bit.  Subject and time
labels, and the factor indices inside JSON artifacts, are 1-based on disk;
in-memory indices are 0-based everywhere.
"""

from __future__ import annotations

import csv
import dataclasses
import json
from pathlib import Path
from typing import Union

import numpy as np

from .datamodel import LongitudinalDataset
from .solver import FitResult, IterationRecord
from .simulate import Scenario, ScenarioConfig, SimulatedTruth

PathLike = Union[str, Path]


def _fmt(x: float) -> str:
    return repr(float(x))


def write_dataset_csv(data: LongitudinalDataset, path: PathLike) -> None:
    """Write observed cells as long-format rows."""
    q, p = data.n_env, data.n_gen
    header = ["subject", "time", "y"] + [f"e{u + 1}" for u in range(q)] + [
        f"x{v + 1}" for v in range(p)
    ]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(data.n_subjects):
            xs = [_fmt(v) for v in data.gen[i]]
            for j in range(data.n_times):
                if not data.observed[i, j]:
                    continue
                row = [str(i + 1), str(j + 1), _fmt(data.response[i, j])]
                row += [_fmt(v) for v in data.env[i, j]]
                writer.writerow(row + xs)


def read_dataset_csv(path: PathLike) -> LongitudinalDataset:
    """Inverse of ``write_dataset_csv``.

    Subjects are ordered by their numeric label; k is the largest time label.
    Genetic columns must repeat identically across a subject's rows.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[:3] != ["subject", "time", "y"]:
            raise ValueError("dataset CSV must start with subject,time,y columns")
        q = sum(1 for name in header if name.startswith("e"))
        p = sum(1 for name in header if name.startswith("x"))
        if len(header) != 3 + q + p:
            raise ValueError("unrecognized columns in dataset CSV header")
        rows = [(int(r[0]), int(r[1]), [float(v) for v in r[2:]]) for r in reader]
    if not rows:
        raise ValueError("dataset CSV has no data rows")
    subjects = sorted({r[0] for r in rows})
    index = {s: i for i, s in enumerate(subjects)}
    n = len(subjects)
    k = max(r[1] for r in rows)
    resp = np.zeros((n, k))
    env = np.zeros((n, k, q))
    gen = np.zeros((n, p))
    seen_gen = np.zeros(n, dtype=bool)
    obs = np.zeros((n, k), dtype=bool)
    for s, t, vals in rows:
        i, j = index[s], t - 1
        if j < 0:
            raise ValueError(f"time labels must be >= 1, got {t}")
        if obs[i, j]:
            raise ValueError(f"duplicate row for subject {s}, time {t}")
        obs[i, j] = True
        resp[i, j] = vals[0]
        env[i, j] = vals[1 : 1 + q]
        x = np.array(vals[1 + q :])
        if seen_gen[i]:
            if not np.array_equal(gen[i], x):
                raise ValueError(f"genetic columns vary over time for subject {s}")
        else:
            gen[i] = x
            seen_gen[i] = True
    return LongitudinalDataset(response=resp, env=env, gen=gen, observed=obs)


# ---- JSON artifacts ----


def _config_to_dict(config: ScenarioConfig) -> dict:
    out = dataclasses.asdict(config)
    out["scenario"] = config.scenario.value
    return out


def _config_from_dict(payload: dict) -> ScenarioConfig:
    payload = dict(payload)
    payload["scenario"] = Scenario.from_name(payload["scenario"])
    return ScenarioConfig(**payload)


def write_truth_json(truth: SimulatedTruth, path: PathLike) -> None:
    payload = {
        "beta_true": [float(b) for b in truth.beta_true],
        "true_main": [v + 1 for v in truth.true_main],
        "true_inter": [[v + 1, u + 1] for v, u in truth.true_inter],
        "config": _config_to_dict(truth.config),
    }
    Path(path).write_text(json.dumps(payload, indent=1))


def read_truth_json(path: PathLike) -> SimulatedTruth:
    payload = json.loads(Path(path).read_text())
    config = _config_from_dict(payload["config"])
    return SimulatedTruth(
        dataset=None,  # the sidecar carries only the generating truth
        beta_true=np.array(payload["beta_true"]),
        true_main=tuple(v - 1 for v in payload["true_main"]),
        true_inter=tuple((v - 1, u - 1) for v, u in payload["true_inter"]),
        config=config,
    )


def fit_to_dict(fit: FitResult, context: dict | None = None) -> dict:
    out = {
        "beta_hat": [float(b) for b in fit.beta_hat],
        "converged": bool(fit.converged),
        "iterations": int(fit.iterations),
        "final_q": float(fit.final_q),
        "final_penalty": float(fit.final_penalty),
        "final_objective": float(fit.final_objective),
        "selected_main": [v + 1 for v in fit.selected_main],
        "selected_inter": [[v + 1, u + 1] for v, u in fit.selected_inter],
        "threshold": float(fit.threshold),
        "trace": [dataclasses.asdict(rec) for rec in fit.trace],
    }
    if context:
        out["context"] = context
    return out


def write_fit_json(fit: FitResult, path: PathLike, context: dict | None = None) -> None:
    Path(path).write_text(json.dumps(fit_to_dict(fit, context), indent=1))


def read_fit_json(path: PathLike) -> FitResult:
    payload = json.loads(Path(path).read_text())
    return FitResult(
        beta_hat=np.array(payload["beta_hat"]),
        converged=payload["converged"],
        iterations=payload["iterations"],
        final_q=payload["final_q"],
        final_penalty=payload["final_penalty"],
        final_objective=payload["final_objective"],
        selected_main=[v - 1 for v in payload["selected_main"]],
        selected_inter=[(v - 1, u - 1) for v, u in payload["selected_inter"]],
        threshold=payload["threshold"],
        trace=[IterationRecord(**rec) for rec in payload["trace"]],
    )


def write_json(payload: dict, path: PathLike) -> None:
    Path(path).write_text(json.dumps(payload, indent=1))


def error_json(exc: BaseException) -> str:
    """Machine-readable error envelope for the command line."""
    return json.dumps({"error": type(exc).__name__, "message": str(exc)})
