"""Marginal gene-by-gene screening with cluster-robust tests.

Each genetic factor is tested in its own small pooled regression of the
response on an intercept, the environment columns, the factor, and its
environment interactions.  Standard errors come from the subject-level
sandwich estimator (with the usual finite-sample correction), so the repeated
measures within a subject do not distort the tests.  A factor is kept when any
of its q+1 coefficients (main effect or interactions) has a two-sided p-value
below the cutoff.

This is a pre-filter for very wide panels, not an estimator: it bounds the
candidate set handed to the penalized fit.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .datamodel import LongitudinalDataset


@dataclass
class ScreenReport:
    """Per-factor minimum p-value over its main and interaction tests."""

    min_p: np.ndarray
    kept: np.ndarray
    cutoff: float
    p_values: np.ndarray          # (p, q + 1), main effect first


def marginal_screen(data: LongitudinalDataset, cutoff: float = 0.005) -> ScreenReport:
    """Screen all genetic factors; see the module docstring for the model.

    Constant factors are unidentifiable, get p-value 1 for every coefficient,
    and raise a warning.
    """
    if not 0.0 < cutoff <= 1.0:
        raise ValueError("cutoff must lie in (0, 1]")
    obs = data.observed
    n, k = obs.shape
    q = data.n_env
    p = data.n_gen
    rows = np.nonzero(obs.ravel())[0]
    subj = np.repeat(np.arange(n), k)[rows]
    y = data.response.ravel()[rows]
    env = data.env.reshape(n * k, q)[rows]
    snp = np.repeat(data.gen, k, axis=0)[rows]          # (N, p)
    nobs = y.size
    g = 2 * q + 2                                        # intercept, env, x, env*x

    const = snp.std(axis=0) == 0.0
    if const.any():
        warnings.warn(f"{int(const.sum())} constant genetic column(s) screened with p = 1")

    # One stacked design per factor: (p, N, g).
    design = np.empty((p, nobs, g))
    design[:, :, 0] = 1.0
    design[:, :, 1 : 1 + q] = env
    design[:, :, 1 + q] = snp.T
    design[:, :, 2 + q :] = snp.T[:, :, None] * env[None, :, :]

    live = np.nonzero(~const)[0]
    p_values = np.ones((p, q + 1))
    if live.size:
        dl = design[live]
        xtx = np.einsum("vng,vnh->vgh", dl, dl)
        xty = np.einsum("vng,n->vg", dl, y)
        coef = np.linalg.solve(xtx, xty[:, :, None])[:, :, 0]
        resid = y[None, :] - np.einsum("vng,vg->vn", dl, coef)

        # Subject-level score sums for the sandwich meat.
        starts = np.nonzero(np.r_[True, np.diff(subj) != 0])[0]
        scores = np.add.reduceat(dl * resid[:, :, None], starts, axis=1)
        meat = np.einsum("vig,vih->vgh", scores, scores)
        bread = np.linalg.inv(xtx)
        n_cluster = starts.size
        correction = (n_cluster / (n_cluster - 1)) * ((nobs - 1) / (nobs - g))
        cov = correction * bread @ meat @ bread
        se = np.sqrt(np.diagonal(cov, axis1=1, axis2=2))
        with np.errstate(divide="ignore", invalid="ignore"):
            z = np.where(se > 0, coef / se, 0.0)
        p_values[live] = 2.0 * stats.norm.sf(np.abs(z[:, 1 + q :]))

    min_p = p_values.min(axis=1)
    kept = np.nonzero(min_p < cutoff)[0]
    return ScreenReport(min_p=min_p, kept=kept, cutoff=cutoff, p_values=p_values)
