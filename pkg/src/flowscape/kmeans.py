"""Seeded k-means (euclidean and spherical) with k-means++ initialization.

Hand-rolled so that runs are bit-reproducible from an integer seed alone,
with deterministic restart selection and empty-cluster reseeding.
"""

from __future__ import annotations

import numpy as np

_MAX_ITER = 300


def _sq_distances(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    pp = np.sum(points**2, axis=1)[:, None]
    cc = np.sum(centers**2, axis=1)[None, :]
    d2 = pp + cc - 2.0 * points @ centers.T
    np.maximum(d2, 0.0, out=d2)
    return d2


def _cos_distances(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    return np.clip(1.0 - points @ centers.T, 0.0, 2.0)


def _plus_plus_init(
    points: np.ndarray, k: int, rng: np.random.Generator, dist_fn
) -> np.ndarray:
    n = points.shape[0]
    centers = np.empty((k, points.shape[1]))
    idx = int(rng.integers(n))
    centers[0] = points[idx]
    closest = dist_fn(points, centers[:1]).ravel()
    for j in range(1, k):
        total = closest.sum()
        if total <= 0.0:
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=closest / total))
        centers[j] = points[idx]
        closest = np.minimum(closest, dist_fn(points, centers[j : j + 1]).ravel())
    return centers


def _lloyd(points, k, rng, spherical):
    dist_fn = _cos_distances if spherical else _sq_distances
    centers = _plus_plus_init(points, k, rng, dist_fn)
    labels = np.full(points.shape[0], -1, dtype=int)
    for _ in range(_MAX_ITER):
        d = dist_fn(points, centers)
        new_labels = np.argmin(d, axis=1)
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for j in range(k):
            members = labels == j
            if not np.any(members):
                # reseed an empty cluster at the point worst served so far
                far = int(np.argmax(d[np.arange(len(labels)), labels]))
                centers[j] = points[far]
                labels[far] = j
                members = labels == j
            mean = points[members].mean(axis=0)
            if spherical:
                norm = np.linalg.norm(mean)
                centers[j] = mean / norm if norm > 0 else mean
            else:
                centers[j] = mean
    inertia = float(dist_fn(points, centers)[np.arange(len(labels)), labels].sum())
    return labels, centers, inertia


def kmeans(
    points: np.ndarray,
    k: int,
    seed: int,
    restarts: int = 20,
    spherical: bool = False,
) -> tuple[np.ndarray, np.ndarray, float]:
    """Cluster rows of `points` into k groups; returns (labels, centers, inertia).

    The best of `restarts` independent k-means++ runs is kept (ties go to
    the earliest restart).  With spherical=True rows must be unit vectors
    and distances are 1 - cosine.
    """
    points = np.asarray(points, dtype=float)
    if points.ndim != 2:
        raise ValueError("points must be 2-D")
    n = points.shape[0]
    if not 1 <= k <= n:
        raise ValueError("k must be in [1, n_points]")
    streams = np.random.SeedSequence(seed).spawn(restarts)
    best = None
    for ss in streams:
        labels, centers, inertia = _lloyd(points, k, np.random.default_rng(ss), spherical)
        if best is None or inertia < best[2] - 1e-12:
            best = (labels, centers, inertia)
    return best
