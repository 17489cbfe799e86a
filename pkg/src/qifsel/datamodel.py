"""Longitudinal data containers and interaction-design expansion.

A dataset holds a continuous response observed over repeated time points,
time-varying environment columns, and time-invariant genetic columns.  The
regression model includes every gene-by-environment product, so for q
environment factors and p genetic factors each observation contributes the row

    (1, E_1, ..., E_q, X_1, E_1 X_1, ..., E_q X_1, ..., X_p, E_1 X_p, ..., E_q X_p)

of length d = 1 + q + p (q + 1).  The q + 1 coefficients tied to genetic factor
v (its main effect first, then its q interactions) form one selection group;
the intercept and the environment coefficients are never penalized.

Missing time points are carried as a boolean mask rather than ragged arrays.
Expanded design rows at unobserved cells are zeroed so downstream code can sum
over the full (n, k) lattice without touching masked entries.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np


@dataclass(frozen=True)
class LongitudinalDataset:
    """Repeated-measures data for n subjects over a k-point time lattice.

    Parameters
    ----------
    response : (n, k) array
        Outcome values; entries at unobserved cells are ignored.
    env : (n, k, q) array
        Environment measurements, may be constant over time.
    gen : (n, p) array
        Genetic measurements, constant over time by construction.
    observed : (n, k) bool array, optional
        Observation mask; defaults to everything observed.
    """

    response: np.ndarray
    env: np.ndarray
    gen: np.ndarray
    observed: Optional[np.ndarray] = None

    def __post_init__(self):
        resp = np.asarray(self.response, dtype=float)
        env = np.asarray(self.env, dtype=float)
        gen = np.asarray(self.gen, dtype=float)
        if resp.ndim != 2:
            raise ValueError(f"response must be (n, k), got shape {resp.shape}")
        n, k = resp.shape
        if env.ndim != 3 or env.shape[:2] != (n, k):
            raise ValueError(
                f"env must be (n, k, q) = ({n}, {k}, q), got shape {env.shape}"
            )
        if gen.ndim != 2 or gen.shape[0] != n:
            raise ValueError(f"gen must be (n, p) with n={n}, got shape {gen.shape}")
        if self.observed is None:
            obs = np.ones((n, k), dtype=bool)
        else:
            obs = np.asarray(self.observed)
            if obs.shape != (n, k):
                raise ValueError(
                    f"observed mask must match response shape {(n, k)}, got {obs.shape}"
                )
            obs = obs.astype(bool)
        object.__setattr__(self, "response", resp)
        object.__setattr__(self, "env", env)
        object.__setattr__(self, "gen", gen)
        object.__setattr__(self, "observed", obs)

    @property
    def n_subjects(self) -> int:
        return self.response.shape[0]

    @property
    def n_times(self) -> int:
        return self.response.shape[1]

    @property
    def n_env(self) -> int:
        return self.env.shape[2]

    @property
    def n_gen(self) -> int:
        return self.gen.shape[1]


@dataclass(frozen=True)
class Violation:
    """One value-level problem found by ``validate_dataset``."""

    field: str
    message: str
    subject: Optional[int] = None
    time: Optional[int] = None


@dataclass(frozen=True)
class ExpandedDesign:
    """Expanded interaction design with group bookkeeping.

    ``w`` is (n, k, d) with rows zeroed at unobserved cells.  ``groups`` lists,
    per genetic factor, the d-indices of its coefficient block (main effect
    first); ``unpenalized`` lists the intercept and environment indices.
    """

    w: np.ndarray
    groups: List[np.ndarray]
    unpenalized: np.ndarray
    n_env: int

    @property
    def d(self) -> int:
        return self.w.shape[2]

    @property
    def group_size(self) -> int:
        return self.n_env + 1


def design_dim(p: int, q: int) -> int:
    """Coefficient count d = 1 + q + p(q + 1)."""
    return 1 + q + p * (q + 1)


def expand_design(data: LongitudinalDataset) -> ExpandedDesign:
    """Build the full interaction design from a dataset.

    Returns
    -------
    ExpandedDesign
        Rows follow the fixed order (intercept, environments, then per genetic
        factor its main column followed by its q interaction columns).
    """
    n, k = data.response.shape
    q = data.n_env
    p = data.n_gen
    d = design_dim(p, q)

    w = np.empty((n, k, d))
    w[:, :, 0] = 1.0
    w[:, :, 1 : 1 + q] = data.env
    # Per factor v the block is (X_v, E_1 X_v, ..., E_q X_v).
    x = data.gen[:, None, :]                       # (n, 1, p) broadcast over time
    w[:, :, 1 + q :: q + 1] = np.broadcast_to(x, (n, k, p))
    inter = data.env[:, :, :, None] * x[:, :, None, :]   # (n, k, q, p)
    for u in range(q):
        w[:, :, 2 + q + u :: q + 1] = inter[:, :, u, :]
    w[~data.observed] = 0.0

    groups = [np.arange(1 + q + v * (q + 1), 1 + q + (v + 1) * (q + 1)) for v in range(p)]
    return ExpandedDesign(w=w, groups=groups, unpenalized=np.arange(1 + q), n_env=q)


def validate_dataset(data: LongitudinalDataset) -> List[Violation]:
    """Collect value-level violations without raising.

    Checks finiteness of response and environment at observed cells, finiteness
    of the genetic matrix, and that every subject has at least one observed
    time point.
    """
    out: List[Violation] = []
    obs = data.observed
    bad_resp = ~np.isfinite(data.response) & obs
    for i, j in zip(*np.nonzero(bad_resp)):
        out.append(Violation("response", "non-finite value at observed cell",
                             subject=int(i), time=int(j)))
    bad_env = ~np.isfinite(data.env) & obs[:, :, None]
    for i, j, u in zip(*np.nonzero(bad_env)):
        out.append(Violation(f"e{u + 1}", "non-finite value at observed cell",
                             subject=int(i), time=int(j)))
    bad_gen = ~np.isfinite(data.gen)
    for i, v in zip(*np.nonzero(bad_gen)):
        out.append(Violation(f"x{v + 1}", "non-finite value", subject=int(i)))
    empty = ~obs.any(axis=1)
    for i in np.nonzero(empty)[0]:
        out.append(Violation("observed", "subject has no observed time points",
                             subject=int(i)))
    return out


def subset_subjects(data: LongitudinalDataset, idx: Sequence[int]) -> LongitudinalDataset:
    """Dataset restricted to the given subject indices, order preserved."""
    idx = np.asarray(idx, dtype=int)
    return LongitudinalDataset(
        response=data.response[idx],
        env=data.env[idx],
        gen=data.gen[idx],
        observed=data.observed[idx],
    )
