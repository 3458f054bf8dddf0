"""Throughput counting in a small box (e.g. at the exit of a queue).

Counts are bucketed over time.  Without identities, an event is a rising
edge: the box becomes occupied after at least one fully empty second.  With
track ids (simulator output), each id's entry into the box is counted
instead, which is robust to several people being in the box at once.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import CentroidStream


@dataclass(frozen=True)
class CountBox:
    """Axis-aligned rectangle [x_min, x_max) x [y_min, y_max)."""

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self):
        if not (self.x_max > self.x_min and self.y_max > self.y_min):
            raise ValueError("counting box must have positive area")

    def contains(self, x, y):
        return (x >= self.x_min) & (x < self.x_max) & (y >= self.y_min) & (y < self.y_max)


def count_exit_box(stream: CentroidStream, box: CountBox, bucket: float):
    """Per-bucket entry counts for a counting box.

    Returns (bucket_starts, counts).  Buckets are aligned to multiples of
    `bucket` seconds and span the stream's time range; an empty stream gives
    two empty arrays.
    """
    if not (bucket > 0):
        raise ValueError("bucket must be positive")
    if len(stream) == 0:
        return np.zeros(0), np.zeros(0, dtype=np.int64)

    inside = box.contains(stream.x, stream.y)
    t0 = float(np.floor(stream.t.min() / bucket) * bucket)
    n_buckets = int(np.floor((stream.t.max() - t0) / bucket)) + 1
    starts = t0 + bucket * np.arange(n_buckets)
    counts = np.zeros(n_buckets, dtype=np.int64)

    if stream.track_id is not None:
        # Entry = id seen inside the box now, and not inside at its previous
        # appearance (or appearing for the first time inside).
        order = np.lexsort((stream.t, stream.track_id))
        tid = stream.track_id[order]
        ins = inside[order]
        ts = stream.t[order]
        first_of_id = np.empty(tid.size, dtype=bool)
        first_of_id[0] = True
        first_of_id[1:] = tid[1:] != tid[:-1]
        prev_inside = np.empty(tid.size, dtype=bool)
        prev_inside[0] = False
        prev_inside[1:] = ins[:-1]
        prev_inside[first_of_id] = False
        entries = ins & ~prev_inside
        for t in ts[entries]:
            counts[int((t - t0) // bucket)] += 1
        return starts, counts

    # Anonymous mode: rising edge of box occupancy per second.
    seconds = np.floor(stream.t).astype(np.int64)
    occupied = np.unique(seconds[inside])
    if occupied.size:
        rising = np.empty(occupied.size, dtype=bool)
        rising[0] = True
        rising[1:] = np.diff(occupied) > 1
        for s in occupied[rising]:
            counts[int((s - t0) // bucket)] += 1
    return starts, counts
