"""Independent reference implementations used to cross-check production code.

Everything here is deliberately naive and self-contained: a dense two-phase
simplex method for small linear programs, and a principal-angle route to the
subspace-inclusion score.  These must never import from the production
solver paths they are used to verify.
"""

import numpy as np


class Infeasible(Exception):
    pass


class Unbounded(Exception):
    pass


def _pivot(T, basis, row, col):
    T[row] /= T[row, col]
    for r in range(T.shape[0]):
        if r != row and T[r, col] != 0.0:
            T[r] -= T[r, col] * T[row]
    basis[row] = col


def _run_simplex(T, basis, cost, tol=1e-10):
    """Minimize cost over the tableau T in place (Bland's rule)."""
    m, n1 = T.shape
    n = n1 - 1
    while True:
        reduced = cost[:n] - cost[basis] @ T[:, :n]
        entering = -1
        for j in range(n):
            if reduced[j] < -tol:
                entering = j
                break
        if entering < 0:
            return
        leaving = -1
        best_ratio = np.inf
        for r in range(m):
            a = T[r, entering]
            if a > tol:
                ratio = T[r, n] / a
                if ratio < best_ratio - 1e-12 or (
                    abs(ratio - best_ratio) <= 1e-12
                    and (leaving < 0 or basis[r] < basis[leaving])
                ):
                    best_ratio = ratio
                    leaving = r
        if leaving < 0:
            raise Unbounded()
        _pivot(T, basis, leaving, entering)


def solve_lp_reference(cost, A_eq, b_eq, tol=1e-9):
    """Solve min cost@x s.t. A_eq@x = b_eq, x >= 0 by two-phase dense simplex.

    Returns (x, objective).  Intended for tiny instances only.
    """
    A = np.array(A_eq, dtype=float)
    b = np.array(b_eq, dtype=float)
    cost = np.asarray(cost, dtype=float)
    m, n = A.shape
    flip = b < 0
    A[flip] *= -1.0
    b[flip] *= -1.0

    # Phase 1: artificial basis.
    T = np.hstack([A, np.eye(m), b[:, None]])
    basis = list(range(n, n + m))
    phase1_cost = np.concatenate([np.zeros(n), np.ones(m)])
    _run_simplex(T, basis, phase1_cost, tol)
    x_all = np.zeros(n + m)
    for r, bc in enumerate(basis):
        x_all[bc] = T[r, -1]
    if phase1_cost @ x_all > 1e-7:
        raise Infeasible()

    # Drive remaining artificials out of the basis (or drop redundant rows).
    keep_rows = []
    for r in range(m):
        if basis[r] >= n:
            piv = -1
            for j in range(n):
                if abs(T[r, j]) > tol:
                    piv = j
                    break
            if piv < 0:
                continue  # redundant constraint
            _pivot(T, basis, r, piv)
        keep_rows.append(r)
    T = np.hstack([T[keep_rows, :n], T[keep_rows, -1:]])
    basis = [basis[r] for r in keep_rows]

    phase2_cost = np.concatenate([cost, [0.0]])
    _run_simplex(T, basis, phase2_cost, tol)
    x = np.zeros(n)
    for r, bc in enumerate(basis):
        x[bc] = T[r, -1]
    return x, float(cost @ x)


def l1_coding_objective_reference(X, i):
    """Optimal L1 reconstruction error of column i of X from the other columns,
    over nonnegative weights summing to one.

    Split-residual form: variables [c, e_plus, e_minus], constraints
    X_{-i} c + e_plus - e_minus = x_i and sum(c) = 1, all variables >= 0,
    objective sum(e_plus + e_minus).
    """
    X = np.asarray(X, dtype=float)
    d, m = X.shape
    others = [j for j in range(m) if j != i]
    n = m - 1
    A = np.zeros((d + 1, n + 2 * d))
    A[:d, :n] = X[:, others]
    A[:d, n : n + d] = np.eye(d)
    A[:d, n + d :] = -np.eye(d)
    A[d, :n] = 1.0
    b = np.concatenate([X[:, i], [1.0]])
    cost = np.concatenate([np.zeros(n), np.ones(2 * d)])
    x, obj = solve_lp_reference(cost, A, b)
    c_full = np.zeros(m)
    c_full[others] = x[:n]
    return c_full, obj


def inclusion_score_via_principal_angles(U1, U2):
    """Subspace inclusion score computed from principal angles.

    The singular values of U1^T U2 are the cosines of the principal angles
    between the two column spans; the score is their mean square over the
    smaller dimension.
    """
    s = np.linalg.svd(U1.T @ U2, compute_uv=False)
    s = np.clip(s, 0.0, 1.0)
    return float(np.sum(s**2) / min(U1.shape[1], U2.shape[1]))
