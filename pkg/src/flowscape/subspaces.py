"""Cluster subspace bases and the normalized inclusion score between them."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DegenerateCluster


@dataclass
class SubspaceBasis:
    """Column-orthonormal basis of one cluster's linear subspace."""

    U: np.ndarray

    @property
    def dim(self) -> int:
        return self.U.shape[1]

    @property
    def ambient_dim(self) -> int:
        return self.U.shape[0]


def subspace_basis(columns: np.ndarray, energy: float = 0.9) -> SubspaceBasis:
    """Dominant left singular subspace of a cluster's (uncentered) columns.

    The dimension is the smallest r whose singular values carry at least
    `energy` of the total squared spectrum, capped at the numerical rank.
    """
    if not (0.0 < energy <= 1.0):
        raise ValueError("energy must be in (0, 1]")
    M = np.asarray(columns, dtype=float)
    if M.ndim != 2 or M.shape[1] < 1:
        raise ValueError("need a d x n matrix with at least one column")
    if not np.any(M):
        raise DegenerateCluster("cluster matrix is all zero")
    U, s, _ = scipy.linalg.svd(M, full_matrices=False)
    rank = int(np.sum(s > s[0] * 1e-12))
    power = s**2
    frac = np.cumsum(power) / power.sum()
    r = int(np.searchsorted(frac, energy - 1e-15) + 1)
    r = min(r, rank)
    return SubspaceBasis(U=U[:, :r])


def nsi(a: SubspaceBasis, b: SubspaceBasis) -> float:
    """Normalized subspace inclusion between two subspaces.

    trace(Ua^T Ub Ub^T Ua) / min(dim_a, dim_b), which is 1 when one
    subspace contains the other and 0 when they are orthogonal.  Clamped to
    [0, 1] against rounding.
    """
    if a.ambient_dim != b.ambient_dim:
        raise ValueError("subspaces live in different ambient dimensions")
    M = a.U.T @ b.U
    val = float(np.sum(M * M)) / min(a.dim, b.dim)
    return min(1.0, max(0.0, val))
