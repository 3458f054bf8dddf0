"""Floor grids and one-second binary occupancy rasterization.

The floor is discretized into a fixed-size grid; each one-second slice of a
centroid stream becomes a binary grid (cell = 1 iff at least one centroid
falls into it).  Grids are stored row-major as flat vectors of length
rows * cols.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class GridSpec:
    """Geometry of the floor grid.

    origin is the (x, y) of the minimum corner in meters; cells are square
    with side cell_size.  Binning is half-open: a point exactly on a cell's
    max edge belongs to the next cell, and points on the grid's outer max
    edge are out of bounds.
    """

    origin: tuple[float, float]
    width: float
    height: float
    cell_size: float

    def __post_init__(self):
        if not (self.cell_size > 0):
            raise ValueError("cell_size must be positive")
        if not (self.width > 0 and self.height > 0):
            raise ValueError("width and height must be positive")

    @property
    def rows(self) -> int:
        return max(1, math.ceil(self.height / self.cell_size))

    @property
    def cols(self) -> int:
        return max(1, math.ceil(self.width / self.cell_size))

    @property
    def n_cells(self) -> int:
        return self.rows * self.cols

    def cell_indices(self, x, y):
        """Map coordinates to (row, col, in_bounds) arrays."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        col = np.floor((x - self.origin[0]) / self.cell_size).astype(np.int64)
        row = np.floor((y - self.origin[1]) / self.cell_size).astype(np.int64)
        ok = (row >= 0) & (row < self.rows) & (col >= 0) & (col < self.cols)
        return row, col, ok

    def to_dict(self) -> dict:
        return {
            "origin": [self.origin[0], self.origin[1]],
            "width": self.width,
            "height": self.height,
            "cell_size": self.cell_size,
            "rows": self.rows,
            "cols": self.cols,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GridSpec":
        spec = cls(
            origin=(float(data["origin"][0]), float(data["origin"][1])),
            width=float(data["width"]),
            height=float(data["height"]),
            cell_size=float(data["cell_size"]),
        )
        for key in ("rows", "cols"):
            if key in data and int(data[key]) != getattr(spec, key):
                raise ValueError(f"inconsistent grid field {key!r}")
        return spec


@dataclass(frozen=True)
class CentroidStream:
    """Columnar batch of detection centroids, sorted by time.

    t is in seconds; track_id is optional and only produced by the
    simulator (real detections carry no identity).
    """

    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    track_id: np.ndarray | None = None

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if not (t.shape == x.shape == y.shape):
            raise ValueError("t, x, y must have equal length")
        if not (np.isfinite(x).all() and np.isfinite(y).all()):
            raise ValueError("centroid coordinates must be finite")
        if t.size > 1 and np.any(np.diff(t) < 0):
            raise ValueError("timestamps must be non-decreasing")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        if self.track_id is not None:
            tid = np.asarray(self.track_id, dtype=np.int64)
            if tid.shape != t.shape:
                raise ValueError("track_id length mismatch")
            object.__setattr__(self, "track_id", tid)

    def __len__(self) -> int:
        return self.t.size

    def select(self, mask) -> "CentroidStream":
        tid = self.track_id[mask] if self.track_id is not None else None
        return CentroidStream(self.t[mask], self.x[mask], self.y[mask], tid)

    @staticmethod
    def concatenate(streams: list["CentroidStream"]) -> "CentroidStream":
        streams = [s for s in streams if len(s) > 0]
        if not streams:
            return CentroidStream(np.zeros(0), np.zeros(0), np.zeros(0))
        has_ids = all(s.track_id is not None for s in streams)
        tid = np.concatenate([s.track_id for s in streams]) if has_ids else None
        return CentroidStream(
            np.concatenate([s.t for s in streams]),
            np.concatenate([s.x for s in streams]),
            np.concatenate([s.y for s in streams]),
            tid,
        )


@dataclass
class BinaryGrid:
    """Binary occupancy of one one-second slice."""

    spec: GridSpec
    cells: np.ndarray
    t: float
    n_outside: int = field(default=0)

    def __post_init__(self):
        self.cells = np.asarray(self.cells, dtype=np.uint8)
        if self.cells.shape != (self.spec.n_cells,):
            raise ValueError("cells must be a flat vector of length rows*cols")


def rasterize_centroids(records: CentroidStream, spec: GridSpec, t: float = 0.0) -> BinaryGrid:
    """Binary grid for one second of centroids.

    Records outside the grid are ignored; their number is kept on the grid
    as a diagnostic tally.
    """
    cells = np.zeros(spec.n_cells, dtype=np.uint8)
    if len(records) == 0:
        return BinaryGrid(spec=spec, cells=cells, t=t)
    row, col, ok = spec.cell_indices(records.x, records.y)
    cells[row[ok] * spec.cols + col[ok]] = 1
    return BinaryGrid(spec=spec, cells=cells, t=t, n_outside=int((~ok).sum()))
