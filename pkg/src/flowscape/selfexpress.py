"""Convex self-expressive coding and the irregularity ranking.

Each map is reconstructed as a convex combination of the other maps; the
weights of column i minimize the L1 reconstruction error

    minimize ||x_i - X c_i||_1   s.t.   c_i >= 0,  sum(c_i) = 1,  c_ii = 0.

Stacked over columns this gives the coefficient matrix C with zero diagonal
and unit column sums.  The per-map L1 residual is the irregularity score;
maps in the top-p fraction of the ranking are flagged irregular.

Each column is an independent linear program.  It is solved in
split-residual form (residual = e+ - e-, both nonnegative) with HiGHS, then
the weights are cleaned up: negatives within tolerance are clipped and the
column is rescaled to sum exactly to one.  Rows of X that are zero across
all maps contribute nothing to any residual and are dropped before solving.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from .errors import SolverFailure
from .maps import DataMatrix


@dataclass(frozen=True)
class SolverConfig:
    tol_feas: float = 1e-8
    tol_obj: float = 1e-6
    max_iter: int = 50_000

    def __post_init__(self):
        if not (self.tol_feas > 0 and self.tol_obj > 0):
            raise ValueError("tolerances must be positive")


def _as_array(X) -> np.ndarray:
    if isinstance(X, DataMatrix):
        return X.X
    return np.asarray(X, dtype=float)


def _solve_column(X_red: np.ndarray, Xs: sp.csc_matrix, i: int, cfg: SolverConfig) -> np.ndarray:
    d, m = X_red.shape
    idx = np.arange(m) != i
    n = m - 1
    eye = sp.eye(d, format="csc")
    A_top = sp.hstack([Xs[:, idx], eye, -eye], format="csc")
    ones_row = sp.csc_matrix(
        (np.ones(n), (np.zeros(n, dtype=int), np.arange(n))), shape=(1, n + 2 * d)
    )
    A_eq = sp.vstack([A_top, ones_row], format="csc")
    b_eq = np.concatenate([X_red[:, i], [1.0]])
    cost = np.concatenate([np.zeros(n), np.ones(2 * d)])
    res = linprog(
        cost,
        A_eq=A_eq,
        b_eq=b_eq,
        bounds=(0, None),
        method="highs",
        options={
            "maxiter": cfg.max_iter,
            "primal_feasibility_tolerance": min(cfg.tol_feas, 1e-9),
            "dual_feasibility_tolerance": min(cfg.tol_feas, 1e-9),
        },
    )
    if res.status != 0:
        raise SolverFailure(i, res.message.strip())
    c = np.clip(res.x[:n], 0.0, None)
    c /= c.sum()
    full = np.zeros(m)
    full[idx] = c
    return full


def _solve_block(args):
    X_red, cols, cfg = args
    Xs = sp.csc_matrix(X_red)
    return [(i, _solve_column(X_red, Xs, i, cfg)) for i in cols]


def solve_coefficients(X, cfg: SolverConfig | None = None, jobs: int = 1) -> np.ndarray:
    """Coefficient matrix C, one independent L1 program per column.

    Deterministic given X and cfg; columns may be solved concurrently
    (jobs > 1) without affecting the result.
    """
    cfg = cfg or SolverConfig()
    X = _as_array(X)
    d, m = X.shape
    if m < 2:
        raise ValueError("need at least two maps")
    active_rows = np.any(X != 0.0, axis=1)
    X_red = X[active_rows]

    C = np.zeros((m, m))
    if jobs > 1:
        chunks = np.array_split(np.arange(m), jobs * 2)
        work = [(X_red, list(ch), cfg) for ch in chunks if len(ch)]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for block in pool.map(_solve_block, work):
                for i, col in block:
                    C[:, i] = col
    else:
        Xs = sp.csc_matrix(X_red)
        for i in range(m):
            C[:, i] = _solve_column(X_red, Xs, i, cfg)
    return C


def coefficient_feasibility(C: np.ndarray) -> dict:
    """Worst-case violations of the C constraints, for checks and reporting."""
    return {
        "min_entry": float(C.min()),
        "max_col_sum_err": float(np.abs(C.sum(axis=0) - 1.0).max()),
        "max_diag": float(np.abs(np.diag(C)).max()),
    }


def irregularity(X, C: np.ndarray) -> np.ndarray:
    """Per-map L1 reconstruction residuals ||x_i - X c_i||_1.

    The sum of the vector is the global irregularity of the data (the
    objective the solver minimizes).
    """
    X = _as_array(X)
    if C.shape != (X.shape[1], X.shape[1]):
        raise ValueError(f"C must be {X.shape[1]}x{X.shape[1]}, got {C.shape}")
    return np.abs(X - X @ C).sum(axis=0)


@dataclass(frozen=True)
class RegularSplit:
    """Partition of map indices into regular and irregular by ranking."""

    regular_idx: np.ndarray
    irregular_idx: np.ndarray
    p: float
    implied_threshold: float


def split_regular(scores: np.ndarray, p: float) -> RegularSplit:
    """Mark the round(p*m) highest-scoring maps as irregular.

    Ties at the cut prefer the larger original index for the irregular side,
    so the split is deterministic.
    """
    if not (0.0 <= p < 1.0):
        raise ValueError("p must be in [0, 1)")
    scores = np.asarray(scores, dtype=float)
    m = scores.size
    k = int(np.floor(p * m + 0.5))
    order = np.lexsort((np.arange(m), scores))  # ascending score, then index
    regular = np.sort(order[: m - k])
    irregular = np.sort(order[m - k :])
    threshold = float(scores[irregular].min()) if k > 0 else np.inf
    return RegularSplit(
        regular_idx=regular, irregular_idx=irregular, p=float(p), implied_threshold=threshold
    )
