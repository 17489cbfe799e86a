"""Working correlation structures as basis-matrix expansions.

The inverse of a working correlation matrix is approximated by a linear
combination of fixed basis matrices, which lets the inference function absorb
the unknown combination weights instead of estimating correlation parameters.
The first basis is always the identity.  Exchangeable adds the off-diagonal
ones matrix; first-order autoregressive adds the first sub/super-diagonal
matrix (the corner-correction basis is deliberately dropped, so the AR-1
expansion is exact only away from the two boundary diagonal entries).

For subjects with missing time points the bases are built at the full size k
and restricted to the observed rows and columns.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import List

import numpy as np


class Correlation(Enum):
    INDEPENDENCE = "independence"
    EXCHANGEABLE = "exchangeable"
    AR1 = "ar1"

    @property
    def basis_count(self) -> int:
        return 1 if self is Correlation.INDEPENDENCE else 2

    @classmethod
    def from_name(cls, name: str) -> "Correlation":
        try:
            return cls(name.strip().lower())
        except ValueError:
            choices = ", ".join(c.value for c in cls)
            raise ValueError(f"unknown correlation structure {name!r}; choose one of {choices}")


def basis_matrices(structure: Correlation, k: int) -> List[np.ndarray]:
    """Basis matrices M_1..M_m for a cluster of size k.

    M_1 is the k-identity for every structure.  Exchangeable appends the matrix
    with ones off the diagonal and zeros on it; Ar1 appends the matrix with
    ones on the first sub- and super-diagonals.
    """
    if k < 1:
        raise ValueError(f"cluster size must be >= 1, got {k}")
    eye = np.eye(k)
    if structure is Correlation.INDEPENDENCE:
        return [eye]
    if structure is Correlation.EXCHANGEABLE:
        return [eye, np.ones((k, k)) - eye]
    if structure is Correlation.AR1:
        band = np.zeros((k, k))
        idx = np.arange(k - 1)
        band[idx, idx + 1] = 1.0
        band[idx + 1, idx] = 1.0
        return [eye, band]
    raise ValueError(f"unknown structure {structure!r}")


def true_correlation(structure: Correlation, k: int, rho: float) -> np.ndarray:
    """Model correlation matrix R(rho); used by simulation and span checks."""
    if structure is Correlation.INDEPENDENCE:
        return np.eye(k)
    if structure is Correlation.EXCHANGEABLE:
        return (1.0 - rho) * np.eye(k) + rho * np.ones((k, k))
    if structure is Correlation.AR1:
        lag = np.abs(np.subtract.outer(np.arange(k), np.arange(k)))
        return rho ** lag
    raise ValueError(f"unknown structure {structure!r}")


@dataclass(frozen=True)
class ClusterTransform:
    """Row/column selection for one subject's observed time points."""

    subject: int
    kept: np.ndarray

    def __post_init__(self):
        kept = np.asarray(self.kept, dtype=int)
        if kept.ndim != 1 or kept.size == 0:
            raise ValueError("kept must be a non-empty 1-D index array")
        if np.any(np.diff(kept) <= 0):
            raise ValueError("kept indices must be strictly increasing")
        if kept[0] < 0:
            raise ValueError("kept indices must be non-negative")
        object.__setattr__(self, "kept", kept)

    @property
    def k_i(self) -> int:
        return int(self.kept.size)


def transform_from_mask(subject: int, mask: np.ndarray) -> ClusterTransform:
    return ClusterTransform(subject=subject, kept=np.nonzero(np.asarray(mask, bool))[0])


def apply_transform(transform: ClusterTransform, arr: np.ndarray) -> np.ndarray:
    """Delete unobserved time points from a k-indexed array.

    Vectors lose entries; square (k, k) matrices lose matching rows and
    columns; non-square 2-D arrays with k rows lose rows only.  This indexing
    is algebraically identical to pre/post-multiplying by the selection matrix
    that drops unobserved identity columns.
    """
    kept = transform.kept
    a = np.asarray(arr)
    if a.ndim == 1:
        return a[kept]
    if a.ndim == 2:
        if a.shape[0] == a.shape[1]:
            return a[np.ix_(kept, kept)]
        return a[kept, :]
    raise ValueError(f"expected 1-D or 2-D array, got ndim={a.ndim}")
