"""Clustering of regular occupancy maps and reassessment of irregular ones.

Pipeline: build an affinity graph from the self-expressive coefficients,
estimate the number of connected groups from the Laplacian spectrum,
over-segment with spectral clustering, merge segments whose subspaces
overlap strongly, then give irregular maps a second chance against the
merged class subspaces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import FlowscapeError
from .kmeans import kmeans
from .maps import DataMatrix
from .selfexpress import (
    RegularSplit,
    SolverConfig,
    irregularity,
    solve_coefficients,
    split_regular,
)
from .subspaces import SubspaceBasis, nsi, subspace_basis

PROV_REGULAR = "regular"
PROV_RECLASSIFIED = "reclassified"
PROV_IRREGULAR = "irregular"

IRREGULAR_LABEL = -1


@dataclass
class PipelineConfig:
    """Knobs for the full labeling pipeline."""

    p: float = 0.5
    th_nsi: float = 0.93
    gamma: int | None = None
    eps_eig: float = 1e-3
    energy: float = 0.9
    seed: int = 0
    reclassify_th: float | None = None
    solver: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self) -> None:
        if not (0.0 < self.th_nsi <= 1.0):
            raise ValueError("th_nsi must be in (0, 1]")
        if not (0.0 < self.energy <= 1.0):
            raise ValueError("energy must be in (0, 1]")
        if self.gamma is not None and self.gamma < 1:
            raise ValueError("gamma override must be >= 1")


@dataclass
class Labeling:
    """Final per-map assignment: class ids 0..K-1 or -1 for irregular."""

    labels: np.ndarray
    provenance: np.ndarray
    n_classes: int

    def __post_init__(self) -> None:
        pos = self.labels[self.labels >= 0]
        if len(np.unique(pos)) != self.n_classes:
            raise ValueError("n_classes must match the distinct nonnegative labels")


@dataclass
class PipelineResult:
    labeling: Labeling
    coefficients: np.ndarray
    irregularity: np.ndarray
    split: RegularSplit
    k_est: int
    gamma: int
    segment_labels: np.ndarray
    nsi_premerge: np.ndarray
    bases: list[SubspaceBasis]
    reclass_affinity: np.ndarray

    @property
    def labels(self) -> np.ndarray:
        return self.labeling.labels

    @property
    def n_classes(self) -> int:
        return self.labeling.n_classes


def build_affinity(C: np.ndarray, regular_idx: np.ndarray) -> np.ndarray:
    """Symmetrized coefficient graph restricted to the regular maps."""
    S = C + C.T
    W = S[np.ix_(regular_idx, regular_idx)].copy()
    np.fill_diagonal(W, 0.0)
    np.maximum(W, 0.0, out=W)
    return W


def _normalized_laplacian(W: np.ndarray) -> np.ndarray:
    deg = W.sum(axis=1)
    inv_sqrt = np.zeros_like(deg)
    pos = deg > 0
    inv_sqrt[pos] = 1.0 / np.sqrt(deg[pos])
    L = -W * inv_sqrt[:, None] * inv_sqrt[None, :]
    np.fill_diagonal(L, 1.0)
    return L


def estimate_cluster_count(W: np.ndarray, eps_eig: float = 1e-3) -> int:
    """Number of near-zero eigenvalues of the normalized Laplacian of W.

    Isolated vertices sit at eigenvalue 1 of the normalized Laplacian, so
    they are counted separately, one component each.
    """
    if W.shape[0] == 0:
        raise ValueError("empty affinity graph")
    connected = W.sum(axis=1) > 0
    n_iso = int(np.sum(~connected))
    count = n_iso
    if np.any(connected):
        sub = W[np.ix_(connected, connected)]
        evals = scipy.linalg.eigvalsh(_normalized_laplacian(sub))
        count += int(np.sum(evals < eps_eig))
    return max(1, count)


def spectral_segment(W: np.ndarray, gamma: int, seed: int) -> np.ndarray:
    """Normalized spectral clustering of the affinity graph into gamma groups."""
    n = W.shape[0]
    if not 1 <= gamma <= n:
        raise ValueError("gamma must be in [1, number of regular maps]")
    L = _normalized_laplacian(W)
    _, vecs = scipy.linalg.eigh(L, subset_by_index=[0, gamma - 1])
    norms = np.linalg.norm(vecs, axis=1)
    emb = np.where(norms[:, None] > 1e-12, vecs / np.maximum(norms, 1e-12)[:, None], 0.0)
    labels, _, _ = kmeans(emb, gamma, seed=seed, restarts=20)
    return labels


def merge_clusters(
    columns: np.ndarray,
    labels: np.ndarray,
    bases: list[SubspaceBasis],
    th_nsi: float,
    energy: float = 0.9,
) -> tuple[np.ndarray, list[SubspaceBasis], np.ndarray]:
    """Join clusters whose pairwise inclusion score exceeds th_nsi.

    Merging is transitive (connected components of the above-threshold
    graph).  Returns relabeled clusters (ids ordered by earliest member),
    recomputed bases, and the pre-merge score matrix.
    """
    g = len(bases)
    scores = np.eye(g)
    for i in range(g):
        for j in range(i + 1, g):
            scores[i, j] = scores[j, i] = nsi(bases[i], bases[j])
    parent = list(range(g))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i in range(g):
        for j in range(i + 1, g):
            if scores[i, j] > th_nsi:
                parent[find(i)] = find(j)
    roots = np.array([find(i) for i in range(g)])
    comp_of_label = roots[labels]
    # order merged ids by the earliest column index belonging to each
    order: dict[int, int] = {}
    for comp in comp_of_label:
        if comp not in order:
            order[comp] = len(order)
    new_labels = np.array([order[c] for c in comp_of_label], dtype=int)
    merged_bases = [
        subspace_basis(columns[:, new_labels == k], energy) for k in range(len(order))
    ]
    return new_labels, merged_bases, scores


def reclassify_irregular(
    X_irreg: np.ndarray,
    bases: list[SubspaceBasis],
    th: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Assign irregular maps to the best-matching class subspace, if any.

    Affinity of map x to class k is the squared norm of the projection of
    x/|x| onto the class basis; maps whose best affinity stays at or below
    th keep the irregular sentinel.
    """
    n = X_irreg.shape[1]
    K = len(bases)
    affinity = np.zeros((n, K))
    if n == 0:
        return np.empty(0, dtype=int), affinity
    norms = np.linalg.norm(X_irreg, axis=0)
    if np.any(norms == 0):
        raise FlowscapeError("zero-norm map reached reclassification")
    Xu = X_irreg / norms
    for k, b in enumerate(bases):
        affinity[:, k] = np.sum((b.U.T @ Xu) ** 2, axis=0)
    best = np.argmax(affinity, axis=1)
    assigned = affinity[np.arange(n), best] > th
    labels = np.where(assigned, best, IRREGULAR_LABEL)
    return labels.astype(int), affinity


def run_pipeline(
    X: DataMatrix | np.ndarray,
    cfg: PipelineConfig,
    coefficients: np.ndarray | None = None,
    jobs: int = 1,
) -> PipelineResult:
    """Label every column of X as a class member or an irregular map.

    `coefficients` lets a caller reuse an already-solved C when sweeping
    parameters that do not affect the coding stage (p, th_nsi, gamma).
    """
    arr = X.X if isinstance(X, DataMatrix) else np.asarray(X, dtype=float)
    m = arr.shape[1]
    C = coefficients if coefficients is not None else solve_coefficients(
        arr, cfg.solver, jobs=jobs
    )
    if C.shape != (m, m):
        raise ValueError("coefficient matrix shape does not match X")
    scores = irregularity(arr, C)
    split = split_regular(scores, cfg.p)
    reg = split.regular_idx
    W = build_affinity(C, reg)
    k_est = estimate_cluster_count(W, cfg.eps_eig)
    if cfg.gamma is not None:
        gamma = cfg.gamma
    else:
        gamma = max(k_est, math.ceil(1.5 * k_est))
    gamma = min(gamma, len(reg))
    seg = spectral_segment(W, gamma, cfg.seed)
    seg_bases = [
        subspace_basis(arr[:, reg[seg == j]], cfg.energy) for j in range(gamma)
    ]
    merged, bases, nsi_premerge = merge_clusters(
        arr[:, reg], seg, seg_bases, cfg.th_nsi, cfg.energy
    )
    labels = np.full(m, IRREGULAR_LABEL, dtype=int)
    provenance = np.full(m, PROV_IRREGULAR, dtype=object)
    labels[reg] = merged
    provenance[reg] = PROV_REGULAR
    th_re = cfg.th_nsi if cfg.reclassify_th is None else cfg.reclassify_th
    re_labels, affinity = reclassify_irregular(arr[:, split.irregular_idx], bases, th_re)
    labels[split.irregular_idx] = re_labels
    provenance[split.irregular_idx] = np.where(
        re_labels >= 0, PROV_RECLASSIFIED, PROV_IRREGULAR
    )
    labeling = Labeling(
        labels=labels,
        provenance=np.asarray(provenance, dtype=object),
        n_classes=int(merged.max()) + 1,
    )
    return PipelineResult(
        labeling=labeling,
        coefficients=C,
        irregularity=scores,
        split=split,
        k_est=k_est,
        gamma=gamma,
        segment_labels=seg,
        nsi_premerge=nsi_premerge,
        bases=bases,
        reclass_affinity=affinity,
    )
