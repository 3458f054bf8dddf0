"""Occupancy maps: windowed averages of binary grids, and the data matrix.

An occupancy map is the spatio-temporal average of the one-second binary
grids of a time window, so every cell value is k / n_slices for some integer
k.  Maps of one run are collected column-wise into a data matrix; all-zero
(empty) maps are dropped at assembly time so raw windows stay inspectable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GridSpecMismatch, InsufficientData
from .grid import BinaryGrid, CentroidStream, GridSpec


@dataclass
class OccupancyMap:
    """Average occupancy over one window (values in [0, 1] per cell)."""

    spec: GridSpec
    values: np.ndarray
    window_start: float
    window_len: float
    n_slices: int

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.spec.n_cells,):
            raise ValueError("values must be a flat vector of length rows*cols")

    def is_empty(self) -> bool:
        return not np.any(self.values)

    def as_image(self) -> np.ndarray:
        return self.values.reshape(self.spec.rows, self.spec.cols)


def aggregate_window(grids: list[BinaryGrid], window_len: float) -> OccupancyMap:
    """Elementwise mean of the window's binary grids."""
    if not grids:
        raise ValueError("need at least one binary grid")
    if len(grids) > window_len:
        raise ValueError("more grids than seconds in the window")
    spec = grids[0].spec
    for g in grids[1:]:
        if g.spec != spec:
            raise GridSpecMismatch("all grids in a window must share one GridSpec")
    stack = np.stack([g.cells for g in grids]).astype(float)
    return OccupancyMap(
        spec=spec,
        values=stack.mean(axis=0),
        window_start=float(grids[0].t),
        window_len=float(window_len),
        n_slices=len(grids),
    )


def occupancy_from_stream(
    stream: CentroidStream, spec: GridSpec, window_start: float, window_len: float
) -> OccupancyMap:
    """Occupancy map of one window computed directly from a centroid stream.

    Equivalent to rasterizing each one-second slice and averaging, but does
    the (second, cell) de-duplication in one vectorized pass.  The slice
    count is the full number of seconds in the window (empty seconds are
    all-zero grids).
    """
    n_slices = int(round(window_len))
    if n_slices < 1:
        raise ValueError("window_len must cover at least one second")
    values = np.zeros(spec.n_cells, dtype=float)
    in_window = (stream.t >= window_start) & (stream.t < window_start + window_len)
    if np.any(in_window):
        sub = stream.select(in_window)
        row, col, ok = spec.cell_indices(sub.x, sub.y)
        if np.any(ok):
            second = np.floor(sub.t[ok] - window_start).astype(np.int64)
            cell = row[ok] * spec.cols + col[ok]
            hits = np.unique(second * spec.n_cells + cell)
            values = np.bincount(hits % spec.n_cells, minlength=spec.n_cells).astype(float)
    return OccupancyMap(
        spec=spec,
        values=values / n_slices,
        window_start=float(window_start),
        window_len=float(window_len),
        n_slices=n_slices,
    )


def stream_to_maps(
    stream: CentroidStream, spec: GridSpec, window_len: float, start: float | None = None
) -> list[OccupancyMap]:
    """Cut a stream into consecutive windows and build one map per window.

    Windows are aligned to multiples of window_len from `start` (default:
    the largest multiple of window_len not above the first timestamp).
    """
    if len(stream) == 0:
        return []
    if start is None:
        start = float(np.floor(stream.t.min() / window_len) * window_len)
    end = float(stream.t.max())
    maps = []
    w = start
    while w <= end:
        maps.append(occupancy_from_stream(stream, spec, w, window_len))
        w += window_len
    return maps


@dataclass
class DataMatrix:
    """Column-stacked occupancy maps sharing one GridSpec.

    kept_indices records, for each retained column, its position in the
    original map list (empty maps are dropped).
    """

    X: np.ndarray
    spec: GridSpec
    kept_indices: np.ndarray
    window_starts: np.ndarray

    @property
    def d(self) -> int:
        return self.X.shape[0]

    @property
    def m(self) -> int:
        return self.X.shape[1]


def build_data_matrix(maps: list[OccupancyMap]) -> DataMatrix:
    """Assemble the d x m data matrix, dropping all-zero maps.

    Column order follows the input order of the retained maps.
    """
    if not maps:
        raise InsufficientData("no maps given")
    spec = maps[0].spec
    for mp in maps[1:]:
        if mp.spec != spec:
            raise GridSpecMismatch("all maps must share one GridSpec")
    kept = [i for i, mp in enumerate(maps) if not mp.is_empty()]
    if len(kept) < 2:
        raise InsufficientData(f"need at least 2 non-empty maps, found {len(kept)}")
    X = np.column_stack([maps[i].values for i in kept])
    starts = np.array([maps[i].window_start for i in kept], dtype=float)
    return DataMatrix(
        X=X, spec=spec, kept_indices=np.array(kept, dtype=np.int64), window_starts=starts
    )
