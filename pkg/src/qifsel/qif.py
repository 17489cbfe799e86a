"""Quadratic inference function: extended score, objective, derivatives.

For subject i with design block W_i, response y_i, and basis matrices M_1..M_m
of the working structure, the extended score stacks the m moment vectors
W_i' M_t (y_i - W_i beta) into a vector of length m*d.  Writing phibar for the
score mean over subjects and Omegabar for the mean outer product, the objective
is

    Q(beta) = phibar' pinv(Omegabar) phibar,

which is scale-free and bounded by 1 (Omegabar dominates phibar phibar' by
construction).  Under the identity link the Jacobian J = d phibar / d beta is
constant in beta and stacks -(1/n) sum_i W_i' M_t W_i.

Missing time points enter through zeroed design rows and residual entries,
which reproduces exactly the algebra of deleting rows and columns of each M_t:
W*' M* r* = W' Z M Z r with Z the diagonal observation mask.

Two equivalent eigendecomposition routes compute the pseudo-inverse action.
When m*d is larger than n (the usual high-dimensional case) Omegabar has rank
at most n, so the n x n Gram matrix of the score rows carries its whole
nonzero spectrum at a fraction of the cost; otherwise the m*d x m*d matrix is
decomposed directly.  Both drop eigenvalues below 1e-8 of the largest.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .correlation import Correlation, basis_matrices
from .datamodel import ExpandedDesign, LongitudinalDataset

# Relative spectral cutoff of the Moore-Penrose pseudo-inverse.
PINV_RTOL = 1e-8


@dataclass
class QifEvaluation:
    """Objective and frozen-Omegabar derivatives at one beta.

    ``p_vec`` is the gradient of beta -> phibar(beta)' pinv(Omegabar) phibar(beta)
    with Omegabar held fixed at this beta; ``v_mat`` is its (constant) Hessian.
    """

    beta: np.ndarray
    phi_bar: np.ndarray
    omega_bar: np.ndarray
    jac: np.ndarray
    q_value: float
    p_vec: np.ndarray
    v_mat: np.ndarray


class QifEngine:
    """Reusable evaluator bound to one dataset, design, and structure.

    Precomputes the constant Jacobian and the masked design tensor once, then
    serves objective and derivative evaluations at arbitrary beta.  All solver
    and tuning code goes through an engine; the module-level functions below
    wrap one for the single-shot contract API.
    """

    def __init__(
        self,
        data: LongitudinalDataset,
        design: ExpandedDesign,
        structure: Correlation,
    ):
        n, k = data.response.shape
        self.n = n
        self.structure = structure
        self.bases = basis_matrices(structure, k)
        self.m = len(self.bases)
        self.w = design.w                      # (n, k, d), masked rows already zero
        self.d = design.d
        self.y = np.where(data.observed, data.response, 0.0)
        self.observed = data.observed
        self._wflat = self.w.reshape(n * k, self.d)
        # J_t = -(1/n) sum_i W_i' M_t W_i, constant under the identity link.
        blocks = []
        for m_t in self.bases:
            mw = np.einsum("tl,nld->ntd", m_t, self.w)
            blocks.append(-self._wflat.T @ mw.reshape(n * k, self.d) / n)
        self.jac = np.vstack(blocks)           # (m*d, d)

    # ---- score construction ----

    def score_rows(self, beta: np.ndarray) -> np.ndarray:
        """Per-subject extended scores as rows of an (n, m*d) matrix."""
        resid = self.y - self.w @ beta         # zero at unobserved cells
        parts = [
            np.einsum("nkd,nk->nd", self.w, resid @ m_t) for m_t in self.bases
        ]
        return np.concatenate(parts, axis=1)

    def phi_bar(self, beta: np.ndarray) -> np.ndarray:
        return self.score_rows(beta).mean(axis=0)

    # ---- spectral workhorse ----

    def _decompose(self, rows: np.ndarray):
        """Eigen-structure of Omegabar = rows' rows / n via the cheaper route.

        Returns (q_value_helper) pieces: for the Gram route the kept
        eigenvector matrix lives in subject space and is mapped back through
        ``rows``; both routes yield identical mathematical results.
        """
        n = self.n
        if self.m * self.d <= n:
            omega = rows.T @ rows / n
            evals, evecs = np.linalg.eigh(omega)
            keep = evals > PINV_RTOL * max(evals[-1], 0.0)
            return "direct", evals[keep], evecs[:, keep]
        gram = rows @ rows.T                   # eigenvalues of Omegabar times n
        evals, evecs = np.linalg.eigh(gram)
        keep = evals > PINV_RTOL * max(evals[-1], 0.0)
        return "gram", evals[keep], evecs[:, keep]

    def objective(self, beta: np.ndarray) -> float:
        """Q(beta) alone; cheaper than ``derivatives`` for step-halving."""
        rows = self.score_rows(beta)
        route, evals, evecs = self._decompose(rows)
        if evals.size == 0:
            return 0.0
        if route == "direct":
            z = evecs.T @ rows.mean(axis=0)
            return float(z @ (z / evals))
        z = evecs.sum(axis=0)                  # evecs' ones
        return float(z @ z / self.n)

    def derivatives(self, beta: np.ndarray) -> Tuple[float, np.ndarray, np.ndarray]:
        """(Q, P, V) with P the frozen-Omegabar gradient and V its Hessian."""
        rows = self.score_rows(beta)
        route, evals, evecs = self._decompose(rows)
        if evals.size == 0:
            z = np.zeros(self.d)
            return 0.0, z, np.zeros((self.d, self.d))
        if route == "direct":
            phi = rows.mean(axis=0)
            z = evecs.T @ phi
            q = float(z @ (z / evals))
            pinv_phi = evecs @ (z / evals)
            p_vec = 2.0 * self.jac.T @ pinv_phi
            f = evecs.T @ self.jac
            v_mat = 2.0 * f.T @ (f / evals[:, None])
            return q, p_vec, v_mat
        ones_proj = evecs.sum(axis=0)
        q = float(ones_proj @ ones_proj / self.n)
        pinv_phi = rows.T @ (evecs @ (ones_proj / evals))
        p_vec = 2.0 * self.jac.T @ pinv_phi
        t = rows @ self.jac                    # (n, d)
        y = evecs.T @ t
        b = y / evals[:, None]
        v_mat = 2.0 * self.n * b.T @ b
        return q, p_vec, v_mat


# ---- single-shot contract API ----


def extended_score(
    beta: np.ndarray,
    data: LongitudinalDataset,
    design: ExpandedDesign,
    structure: Correlation,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(phi_bar, omega_bar, jac) at beta, with omega_bar materialized."""
    eng = QifEngine(data, design, structure)
    rows = eng.score_rows(np.asarray(beta, dtype=float))
    phi = rows.mean(axis=0)
    omega = rows.T @ rows / eng.n
    return phi, omega, eng.jac


def qif_objective(phi_bar: np.ndarray, omega_bar: np.ndarray) -> float:
    """phibar' pinv(omegabar) phibar with the spectral cutoff of the engine.

    Raises on a rank-zero moment matrix (degenerate data: every subject score
    exactly zero).  The engine's internal path instead returns the limit value
    0 there, which the solver needs when a step lands on an interpolating beta.
    """
    evals, evecs = np.linalg.eigh(omega_bar)
    keep = evals > PINV_RTOL * max(evals[-1], 0.0)
    if not np.any(keep):
        raise ValueError("moment matrix has rank zero")
    z = evecs[:, keep].T @ phi_bar
    return float(z @ (z / evals[keep]))


def qif_derivatives(
    phi_bar: np.ndarray, omega_bar: np.ndarray, jac: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """(P, V) = (2 J' pinv(Om) phibar, 2 J' pinv(Om) J)."""
    evals, evecs = np.linalg.eigh(omega_bar)
    keep = evals > PINV_RTOL * max(evals[-1], 0.0)
    d = jac.shape[1]
    if not np.any(keep):
        return np.zeros(d), np.zeros((d, d))
    u = evecs[:, keep]
    s = evals[keep]
    p_vec = 2.0 * jac.T @ (u @ ((u.T @ phi_bar) / s))
    f = u.T @ jac
    v_mat = 2.0 * f.T @ (f / s[:, None])
    return p_vec, v_mat


def evaluate_qif(
    beta: np.ndarray,
    data: LongitudinalDataset,
    design: ExpandedDesign,
    structure: Correlation,
) -> QifEvaluation:
    """Bundle score, objective, and derivatives; meant for moderate sizes."""
    beta = np.asarray(beta, dtype=float)
    phi, omega, jac = extended_score(beta, data, design, structure)
    q = qif_objective(phi, omega)
    p_vec, v_mat = qif_derivatives(phi, omega, jac)
    return QifEvaluation(beta=beta, phi_bar=phi, omega_bar=omega, jac=jac,
                         q_value=q, p_vec=p_vec, v_mat=v_mat)
