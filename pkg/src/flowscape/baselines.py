"""Reference clusterers on occupancy maps and the clustering-error metric.

K-Means and K-Medoids operate on the angle between maps (cosine
dissimilarity of L2-normalized columns); DBSCAN uses the same distance
with a k-distance-elbow heuristic for eps.  The error metric scores a
predicted labeling against ground truth on the regular maps only, under
the best class correspondence.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .kmeans import kmeans

NOISE_LABEL = -1


@dataclass
class GroundTruth:
    """True per-map class ids, with -1 marking outlier windows."""

    labels: np.ndarray
    is_outlier: np.ndarray

    def __post_init__(self) -> None:
        self.labels = np.asarray(self.labels, dtype=int)
        self.is_outlier = np.asarray(self.is_outlier, dtype=bool)
        if self.labels.shape != self.is_outlier.shape:
            raise ValueError("labels and is_outlier must have the same length")
        if np.any(self.labels[self.is_outlier] != -1):
            raise ValueError("outlier maps must carry label -1")
        if np.any(self.labels[~self.is_outlier] < 0):
            raise ValueError("regular maps must carry a nonnegative class id")

    @property
    def n_regular(self) -> int:
        return int(np.sum(~self.is_outlier))


def _unit_columns(X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    norms = np.linalg.norm(X, axis=0)
    if np.any(norms == 0):
        raise ValueError("zero-norm columns cannot be normalized")
    return X / norms


def kmeans_angular(
    X: np.ndarray, K: int, replicates: int = 10, seed: int = 0
) -> np.ndarray:
    """Spherical k-means over map columns; best of `replicates` runs."""
    points = _unit_columns(X).T
    labels, _, _ = kmeans(points, K, seed=seed, restarts=replicates, spherical=True)
    return labels


def _cosine_matrix(X: np.ndarray) -> np.ndarray:
    Xu = _unit_columns(X)
    return np.clip(1.0 - Xu.T @ Xu, 0.0, 2.0)


def _medoid_run(D: np.ndarray, K: int, rng: np.random.Generator) -> tuple[np.ndarray, float]:
    m = D.shape[0]
    medoids = np.empty(K, dtype=int)
    medoids[0] = int(rng.integers(m))
    closest = D[:, medoids[0]].copy()
    for j in range(1, K):
        total = closest.sum()
        if total <= 0.0:
            medoids[j] = int(rng.integers(m))
        else:
            medoids[j] = int(rng.choice(m, p=closest / total))
        np.minimum(closest, D[:, medoids[j]], out=closest)
    idx = np.arange(m)
    for _ in range(200):
        d = D[:, medoids]
        n1 = np.argmin(d, axis=1)
        d1 = d[idx, n1]
        if K > 1:
            d[idx, n1] = np.inf
            d2 = d.min(axis=1)
        else:
            d2 = np.full(m, np.inf)
        # total-cost change of swapping medoid h for candidate i, all pairs
        # at once: points defect to i whenever it is closer than their
        # current nearest; points served by h fall back to min(d2, D[:, i])
        defect = np.minimum(0.0, D - d1[:, None])
        s = defect.sum(axis=0)
        best_delta, best = -1e-12, None
        for h in range(K):
            served = n1 == h
            delta = s - defect[served].sum(axis=0)
            delta += (np.minimum(D[served], d2[served, None]) - d1[served, None]).sum(axis=0)
            delta[medoids] = np.inf
            i = int(np.argmin(delta))
            if delta[i] < best_delta:
                best_delta, best = float(delta[i]), (h, i)
        if best is None:
            break
        medoids[best[0]] = best[1]
    labels = np.argmin(D[:, medoids], axis=1)
    cost = float(D[idx, medoids[labels]].sum())
    return labels, cost


def kmedoids_angular(
    X: np.ndarray, K: int, replicates: int = 10, seed: int = 0
) -> np.ndarray:
    """PAM k-medoids under cosine dissimilarity; best of `replicates` runs.

    Each replicate seeds medoids by distance-weighted sampling and then
    applies best-improvement swaps until no single medoid exchange lowers
    the total dissimilarity.
    """
    D = _cosine_matrix(X)
    if not 1 <= K <= D.shape[0]:
        raise ValueError("K must be in [1, number of maps]")
    best = None
    for ss in np.random.SeedSequence(seed).spawn(replicates):
        labels, cost = _medoid_run(D, K, np.random.default_rng(ss))
        if best is None or cost < best[1] - 1e-12:
            best = (labels, cost)
    return best[0]


def dbscan_eps(X: np.ndarray, min_pts: int = 5) -> float:
    """Elbow of the sorted k-distance curve (k = min_pts) in cosine distance."""
    D = _cosine_matrix(X)
    m = D.shape[0]
    k = min(min_pts, m - 1)
    kdist = np.sort(np.partition(D, k, axis=1)[:, k])
    # first knee: the deviation below the chord grows while the curve is
    # flatter than the chord and shrinks once it is steeper, so the first
    # sustained drop of the deviation marks the end of the dense-core
    # plateau even when heavier bends follow further up the curve
    n = len(kdist)
    t = np.linspace(0.0, 1.0, n)
    dev = kdist[0] + t * (kdist[-1] - kdist[0]) - kdist
    slack = 0.01 * (kdist[-1] - kdist[0])
    past = np.flatnonzero(np.maximum.accumulate(dev) - dev > slack)
    end = int(past[0]) if past.size else n
    eps = float(kdist[int(np.argmax(dev[:end]))])
    return max(eps, 1e-12)


def dbscan(X: np.ndarray, eps: float, min_pts: int = 5) -> np.ndarray:
    """Density clustering under cosine distance; noise labeled -1.

    Core points are clustered by connected components of the within-eps
    core graph; border points join the cluster of their lowest-index core
    neighbor, which makes the output independent of input ordering.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if min_pts < 1:
        raise ValueError("min_pts must be >= 1")
    D = _cosine_matrix(X)
    m = D.shape[0]
    close = D <= eps
    core = close.sum(axis=1) >= min_pts
    labels = np.full(m, NOISE_LABEL, dtype=int)
    next_label = 0
    for i in range(m):
        if not core[i] or labels[i] != NOISE_LABEL:
            continue
        stack = [i]
        labels[i] = next_label
        while stack:
            j = stack.pop()
            for nb in np.flatnonzero(close[j] & core & (labels == NOISE_LABEL)):
                labels[nb] = next_label
                stack.append(int(nb))
        next_label += 1
    for i in np.flatnonzero(~core):
        core_nbs = np.flatnonzero(close[i] & core)
        if core_nbs.size:
            labels[i] = labels[core_nbs[0]]
    return labels


def clustering_error(pred: np.ndarray, truth: GroundTruth) -> float:
    """Fraction of regular maps misassigned under the best label matching.

    Predicted noise/irregular (-1) on a regular map always counts as a
    miss; the correspondence between predicted and true class ids is the
    optimal bipartite assignment on the contingency table.
    """
    pred = np.asarray(pred, dtype=int)
    if pred.shape != truth.labels.shape:
        raise ValueError("prediction length does not match ground truth")
    reg = ~truth.is_outlier
    n_reg = int(reg.sum())
    if n_reg == 0:
        raise ValueError("ground truth has no regular maps")
    t = truth.labels[reg]
    c = pred[reg]
    matched = c >= 0
    if not np.any(matched):
        return 1.0
    t_ids, t_inv = np.unique(t[matched], return_inverse=True)
    c_ids, c_inv = np.unique(c[matched], return_inverse=True)
    table = np.zeros((len(t_ids), len(c_ids)))
    np.add.at(table, (t_inv, c_inv), 1.0)
    rows, cols = linear_sum_assignment(-table)
    agreement = table[rows, cols].sum()
    return float(1.0 - agreement / n_reg)
