"""Minimax concave penalty and its bi-level sparse-group assembly.

Three penalty kinds are supported.  SPARSE_GROUP penalizes each genetic
factor's coefficient group through the MCP of its Euclidean norm (group-level
selection) and every coefficient inside the group through a second MCP
(within-group selection).  GROUP keeps only the first term, INDIVIDUAL only
the second.  The group-level tuning parameter is scaled by sqrt(group size) so
group and individual penalties are comparable.

The Newton solver linearizes the penalty around the current iterate; the
``assemble_h`` diagonal is exactly that local quadratic weight, with a small
epsilon guard so coefficients sitting at zero keep a finite (huge) weight.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence

import numpy as np

from .datamodel import ExpandedDesign


class PenaltyKind(Enum):
    SPARSE_GROUP = "sparse-group"
    GROUP = "group"
    INDIVIDUAL = "individual"

    @classmethod
    def from_name(cls, name: str) -> "PenaltyKind":
        try:
            return cls(name.strip().lower())
        except ValueError:
            choices = ", ".join(k.value for k in cls)
            raise ValueError(f"unknown penalty kind {name!r}; choose one of {choices}")


@dataclass(frozen=True)
class PenaltySpec:
    """Penalty kind plus tuning constants.

    ``lambda1`` drives group-level selection, ``lambda2`` within-group
    selection; a kind that does not use one of them ignores it.  ``gamma`` is
    the MCP concavity constant and ``epsilon`` the denominator guard of the
    local quadratic weights.
    """

    kind: PenaltyKind
    lambda1: float
    lambda2: float
    gamma: float = 3.0
    epsilon: float = 1e-6

    def __post_init__(self):
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise ValueError("tuning parameters must be non-negative")
        if self.gamma <= 1:
            raise ValueError("gamma must exceed 1")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")


def mcp(t, lam: float, gamma: float):
    """MCP value: lam*t - t^2/(2 gamma) up to the knee gamma*lam, flat after."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("mcp argument must be non-negative")
    flat = 0.5 * gamma * lam * lam
    out = np.where(t <= gamma * lam, lam * t - t * t / (2.0 * gamma), flat)
    return out if out.ndim else float(out)


def mcp_deriv(t, lam: float, gamma: float):
    """MCP derivative: lam - t/gamma below the knee gamma*lam, zero past it."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("mcp_deriv argument must be non-negative")
    out = np.where(t <= gamma * lam, lam - t / gamma, 0.0)
    return out if out.ndim else float(out)


def group_norm(eta: np.ndarray, weight: Optional[np.ndarray] = None) -> float:
    """Euclidean norm of a coefficient group, or sqrt(eta' weight eta)."""
    eta = np.asarray(eta, dtype=float)
    if weight is None:
        return float(np.linalg.norm(eta))
    return float(math.sqrt(max(eta @ weight @ eta, 0.0)))


def empirical_group_weights(design: ExpandedDesign) -> List[np.ndarray]:
    """Per-group empirical second-moment matrices Z_v'Z_v / N.

    Optional weight for the group norm; the default penalty uses the plain
    Euclidean norm instead.
    """
    w = design.w.reshape(-1, design.d)
    nobs = max(int(np.count_nonzero(np.any(w != 0.0, axis=1))), 1)
    return [w[:, idx].T @ w[:, idx] / nobs for idx in design.groups]


def _check_weights(design: ExpandedDesign, group_weights) -> None:
    if group_weights is not None and len(group_weights) != len(design.groups):
        raise ValueError("group_weights must supply one matrix per group")


def penalty_value(
    beta: np.ndarray,
    design: ExpandedDesign,
    spec: PenaltySpec,
    group_weights: Optional[Sequence[np.ndarray]] = None,
) -> float:
    """Total penalty (before the sample-size factor applied by the solver)."""
    _check_weights(design, group_weights)
    beta = np.asarray(beta, dtype=float)
    use_group = spec.kind in (PenaltyKind.SPARSE_GROUP, PenaltyKind.GROUP)
    use_indiv = spec.kind in (PenaltyKind.SPARSE_GROUP, PenaltyKind.INDIVIDUAL)
    total = 0.0
    for gi, idx in enumerate(design.groups):
        eta = beta[idx]
        if use_group:
            lam_g = math.sqrt(idx.size) * spec.lambda1
            total += float(mcp(group_norm(eta, None if group_weights is None else group_weights[gi]),
                               lam_g, spec.gamma))
        if use_indiv:
            total += float(np.sum(mcp(np.abs(eta), spec.lambda2, spec.gamma)))
    return total


def assemble_h(
    beta: np.ndarray,
    design: ExpandedDesign,
    spec: PenaltySpec,
    group_weights: Optional[Sequence[np.ndarray]] = None,
) -> np.ndarray:
    """Diagonal of the penalty's local quadratic weight at ``beta``.

    Intercept and environment coefficients get zero.  Within group v every
    coefficient gets mcp'(/norm of the group/) / (epsilon + norm) from the
    group term and mcp'(|coefficient|) / (epsilon + |coefficient|) from the
    individual term, according to the penalty kind.
    """
    _check_weights(design, group_weights)
    beta = np.asarray(beta, dtype=float)
    h = np.zeros(design.d)
    use_group = spec.kind in (PenaltyKind.SPARSE_GROUP, PenaltyKind.GROUP)
    use_indiv = spec.kind in (PenaltyKind.SPARSE_GROUP, PenaltyKind.INDIVIDUAL)
    for gi, idx in enumerate(design.groups):
        eta = beta[idx]
        if use_group:
            lam_g = math.sqrt(idx.size) * spec.lambda1
            norm = group_norm(eta, None if group_weights is None else group_weights[gi])
            h[idx] += mcp_deriv(norm, lam_g, spec.gamma) / (spec.epsilon + norm)
        if use_indiv:
            a = np.abs(eta)
            h[idx] += mcp_deriv(a, spec.lambda2, spec.gamma) / (spec.epsilon + a)
    return h
