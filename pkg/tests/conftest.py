"""Shared fixtures and independent oracles.

The oracle here rebuilds the extended score the slow, literal way: explicit
per-subject restriction matrices, dense basis products, and a Python loop.
Engine tests compare against it so that a vectorization bug in the package
cannot hide inside its own test.
"""

from __future__ import annotations

import numpy as np
import pytest

from qifsel import Correlation, LongitudinalDataset, basis_matrices, expand_design


def toy_dataset(n=20, k=3, p=3, q=2, seed=0, missing=0.0, noise=1.0):
    """Small random dataset with optional random missingness."""
    rng = np.random.default_rng(seed)
    env = rng.normal(size=(n, k, q))
    gen = rng.normal(size=(n, p))
    observed = np.ones((n, k), dtype=bool)
    if missing > 0.0:
        drop = rng.random((n, k)) < missing
        drop[np.arange(n), rng.integers(0, k, size=n)] = False  # keep one point
        observed &= ~drop
    y = rng.normal(scale=max(noise, 1e-12), size=(n, k))
    data = LongitudinalDataset(response=y, env=env, gen=gen, observed=observed)
    return data


def linear_response(data, beta, noise=0.0, seed=0):
    """Dataset with the same covariates and response W beta + noise."""
    design = expand_design(data)
    mean = design.w @ beta
    rng = np.random.default_rng(seed)
    y = mean + noise * rng.normal(size=mean.shape)
    return LongitudinalDataset(response=y, env=data.env, gen=data.gen,
                               observed=data.observed.copy())


def oracle_extended_score(beta, data, structure):
    """Literal per-subject score with explicit restriction matrices."""
    design = expand_design(data)
    n, k = data.response.shape
    bases = basis_matrices(structure, k)
    d = design.d
    phis = np.zeros((n, len(bases) * d))
    jac = np.zeros((len(bases) * d, d))
    for i in range(n):
        kept = np.nonzero(data.observed[i])[0]
        s_i = np.eye(k)[kept]                   # k_i x k row-selection matrix
        w_i = s_i @ np.where(data.observed[i][:, None], design.w[i], 0.0)
        y_i = s_i @ np.where(data.observed[i], data.response[i], 0.0)
        r_i = y_i - w_i @ beta
        parts, jparts = [], []
        for m_t in bases:
            m_star = s_i @ m_t @ s_i.T
            parts.append(w_i.T @ m_star @ r_i)
            jparts.append(-w_i.T @ m_star @ w_i / n)
        phis[i] = np.concatenate(parts)
        jac += np.vstack(jparts)
    phi_bar = phis.mean(axis=0)
    omega_bar = phis.T @ phis / n
    return phi_bar, omega_bar, jac, phis


def oracle_qif(beta, data, structure, rtol=1e-8):
    """Q via numpy.linalg.pinv, independent of the package's spectral code."""
    phi_bar, omega_bar, _, _ = oracle_extended_score(beta, data, structure)
    return float(phi_bar @ np.linalg.pinv(omega_bar, rcond=rtol) @ phi_bar)


@pytest.fixture
def small_data():
    return toy_dataset(n=20, k=3, p=3, q=2, seed=4)


@pytest.fixture
def unbalanced_data():
    return toy_dataset(n=25, k=4, p=3, q=2, seed=11, missing=0.3)
