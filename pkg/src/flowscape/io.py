"""File formats for streams, maps, matrices, labelings, and results.

All text formats are UTF-8 with '.' decimal separator.  Reals are written
in their shortest round-trip decimal form, so write -> read -> write is
byte-identical; JSON documents are canonicalized (sorted keys, two-space
indent) for the same reason.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .clustering import Labeling
from .errors import ParseError
from .grid import CentroidStream, GridSpec
from .maps import OccupancyMap


def _fmt(v: float) -> str:
    return repr(float(v))


def _parse_float(token: str, path, lineno: int) -> float:
    try:
        return float(token)
    except ValueError:
        raise ParseError(f"{path}:{lineno}: not a number: {token!r}") from None


def _write_text(path, text: str) -> None:
    Path(path).write_text(text, encoding="utf-8")


def _json_dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


# -- centroid streams ---------------------------------------------------

def write_centroids(stream: CentroidStream, path) -> None:
    """CSV with header t,x,y[,track_id], rows sorted by t."""
    has_ids = stream.track_id is not None
    lines = ["t,x,y,track_id" if has_ids else "t,x,y"]
    for i in range(len(stream)):
        row = f"{_fmt(stream.t[i])},{_fmt(stream.x[i])},{_fmt(stream.y[i])}"
        if has_ids:
            row += f",{int(stream.track_id[i])}"
        lines.append(row)
    _write_text(path, "\n".join(lines) + "\n")


def read_centroids(path) -> CentroidStream:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise ParseError(f"{path}:1: empty file")
    header = lines[0].strip()
    if header == "t,x,y,track_id":
        has_ids = True
    elif header == "t,x,y":
        has_ids = False
    else:
        raise ParseError(f"{path}:1: unexpected header {header!r}")
    n_cols = 4 if has_ids else 3
    t, x, y, tid = [], [], [], []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != n_cols:
            raise ParseError(f"{path}:{lineno}: expected {n_cols} fields")
        t.append(_parse_float(parts[0], path, lineno))
        x.append(_parse_float(parts[1], path, lineno))
        y.append(_parse_float(parts[2], path, lineno))
        if has_ids:
            try:
                tid.append(int(parts[3]))
            except ValueError:
                raise ParseError(f"{path}:{lineno}: bad track_id") from None
    return CentroidStream(
        t=np.array(t),
        x=np.array(x),
        y=np.array(y),
        track_id=np.array(tid, dtype=np.int64) if has_ids else None,
    )


# -- occupancy map sets --------------------------------------------------

def _sidecar_path(csv_path) -> Path:
    return Path(str(csv_path) + ".json")


def write_maps(maps: list[OccupancyMap], path, sidecar=None) -> None:
    """One CSV row per map (window_start,v_0..v_{d-1}) plus a JSON sidecar.

    The sidecar carries the grid geometry and windowing shared by all maps.
    """
    if not maps:
        raise ValueError("need at least one map")
    spec = maps[0].spec
    lines = []
    for m in maps:
        if m.spec != spec:
            raise ValueError("all maps must share one grid")
        lines.append(",".join([_fmt(m.window_start)] + [_fmt(v) for v in m.values]))
    _write_text(path, "\n".join(lines) + "\n")
    meta = {
        "grid": spec.to_dict(),
        "window_len": maps[0].window_len,
        "n_slices": maps[0].n_slices,
    }
    _write_text(sidecar or _sidecar_path(path), _json_dump(meta))


def read_maps(path, sidecar=None) -> list[OccupancyMap]:
    meta_path = sidecar or _sidecar_path(path)
    try:
        meta = json.loads(Path(meta_path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ParseError(f"{meta_path}: missing grid sidecar") from None
    except json.JSONDecodeError as e:
        raise ParseError(f"{meta_path}: invalid JSON ({e})") from None
    spec = GridSpec.from_dict(meta["grid"])
    window_len = float(meta["window_len"])
    n_slices = int(meta["n_slices"])
    maps = []
    for lineno, line in enumerate(
        Path(path).read_text(encoding="utf-8").splitlines(), start=1
    ):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != spec.n_cells + 1:
            raise ParseError(
                f"{path}:{lineno}: expected {spec.n_cells + 1} fields, got {len(parts)}"
            )
        vals = [_parse_float(tok, path, lineno) for tok in parts]
        maps.append(
            OccupancyMap(
                spec=spec,
                values=np.array(vals[1:]),
                window_start=vals[0],
                window_len=window_len,
                n_slices=n_slices,
            )
        )
    if not maps:
        raise ParseError(f"{path}:1: no map rows")
    return maps


# -- PGM heatmaps --------------------------------------------------------

def write_pgm(image: np.ndarray, path) -> None:
    """8-bit binary PGM; float images in [0,1] are scaled by 255."""
    img = np.asarray(image)
    if img.ndim != 2:
        raise ValueError("image must be 2-D")
    if img.dtype != np.uint8:
        img = np.round(np.clip(img, 0.0, 1.0) * 255.0).astype(np.uint8)
    header = f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode("ascii")
    Path(path).write_bytes(header + img.tobytes())


def read_pgm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    parts = data.split(b"\n", 3)
    if len(parts) < 4 or parts[0] != b"P5" or parts[2] != b"255":
        raise ParseError(f"{path}: not an 8-bit binary PGM")
    try:
        cols, rows = (int(v) for v in parts[1].split())
    except ValueError:
        raise ParseError(f"{path}: bad PGM dimensions") from None
    pixels = np.frombuffer(parts[3], dtype=np.uint8, count=rows * cols)
    if pixels.size != rows * cols:
        raise ParseError(f"{path}: truncated pixel data")
    return pixels.reshape(rows, cols).copy()


# -- dense matrices (C, NSI, affinity) ------------------------------------

def write_matrix(M: np.ndarray, path) -> None:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    lines = [",".join(_fmt(v) for v in row) for row in M]
    _write_text(path, "\n".join(lines) + "\n")


def read_matrix(path) -> np.ndarray:
    rows = []
    width = None
    for lineno, line in enumerate(
        Path(path).read_text(encoding="utf-8").splitlines(), start=1
    ):
        if not line.strip():
            continue
        vals = [_parse_float(tok, path, lineno) for tok in line.split(",")]
        if width is None:
            width = len(vals)
        elif len(vals) != width:
            raise ParseError(f"{path}:{lineno}: ragged row")
        rows.append(vals)
    if not rows:
        raise ParseError(f"{path}:1: empty matrix")
    return np.array(rows)


# -- irregularity --------------------------------------------------------

def write_irregularity(
    scores: np.ndarray, window_starts: np.ndarray, path, indices=None
) -> None:
    scores = np.asarray(scores, dtype=float)
    idx = np.arange(len(scores)) if indices is None else np.asarray(indices)
    lines = ["index,window_start,irregularity"]
    for i in range(len(scores)):
        lines.append(f"{int(idx[i])},{_fmt(window_starts[i])},{_fmt(scores[i])}")
    _write_text(path, "\n".join(lines) + "\n")


def read_irregularity(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0].strip() != "index,window_start,irregularity":
        raise ParseError(f"{path}:1: unexpected header")
    idx, starts, scores = [], [], []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 3:
            raise ParseError(f"{path}:{lineno}: expected 3 fields")
        idx.append(int(parts[0]))
        starts.append(_parse_float(parts[1], path, lineno))
        scores.append(_parse_float(parts[2], path, lineno))
    return np.array(idx, dtype=np.int64), np.array(starts), np.array(scores)


# -- labelings -----------------------------------------------------------

def write_labeling(labeling: Labeling, window_starts: np.ndarray, path) -> None:
    """JSON array of {window_start, label, provenance} entries."""
    entries = [
        {
            "window_start": float(window_starts[i]),
            "label": int(labeling.labels[i]),
            "provenance": str(labeling.provenance[i]),
        }
        for i in range(len(labeling.labels))
    ]
    _write_text(path, _json_dump(entries))


def read_labeling(path) -> tuple[Labeling, np.ndarray]:
    try:
        entries = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ParseError(f"{path}: invalid JSON ({e})") from None
    labels = np.array([int(e["label"]) for e in entries], dtype=int)
    prov = np.array([str(e["provenance"]) for e in entries], dtype=object)
    starts = np.array([float(e["window_start"]) for e in entries])
    n_classes = len(np.unique(labels[labels >= 0]))
    return Labeling(labels=labels, provenance=prov, n_classes=n_classes), starts


# -- experiment manifests and results -------------------------------------

def write_manifest(manifest: dict, path) -> None:
    _write_text(path, _json_dump(manifest))


def read_manifest(path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ParseError(f"{path}: invalid JSON ({e})") from None


def write_results(rows: list[tuple[str, float, int, float]], path) -> None:
    """Rows of (method, p_out, trial, error)."""
    lines = ["method,p_out,trial,error"]
    for method, p_out, trial, error in rows:
        lines.append(f"{method},{_fmt(p_out)},{int(trial)},{_fmt(error)}")
    _write_text(path, "\n".join(lines) + "\n")


def read_results(path) -> list[tuple[str, float, int, float]]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0].strip() != "method,p_out,trial,error":
        raise ParseError(f"{path}:1: unexpected header")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 4:
            raise ParseError(f"{path}:{lineno}: expected 4 fields")
        rows.append(
            (
                parts[0],
                _parse_float(parts[1], path, lineno),
                int(parts[2]),
                _parse_float(parts[3], path, lineno),
            )
        )
    return rows


def write_counts(starts: np.ndarray, counts: np.ndarray, path) -> None:
    lines = ["bucket_start,count"]
    for i in range(len(counts)):
        lines.append(f"{_fmt(starts[i])},{int(counts[i])}")
    _write_text(path, "\n".join(lines) + "\n")


def read_counts(path) -> tuple[np.ndarray, np.ndarray]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0].strip() != "bucket_start,count":
        raise ParseError(f"{path}:1: unexpected header")
    starts, counts = [], []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise ParseError(f"{path}:{lineno}: expected 2 fields")
        starts.append(_parse_float(parts[0], path, lineno))
        counts.append(int(parts[1]))
    return np.array(starts), np.array(counts, dtype=np.int64)


def write_sweep(rows: list[tuple[float, float, int, float]], path) -> None:
    """Rows of (p, p_out, trial, error): one error curve per outlier level."""
    lines = ["p,p_out,trial,error"]
    for p, p_out, trial, error in rows:
        lines.append(f"{_fmt(p)},{_fmt(p_out)},{int(trial)},{_fmt(error)}")
    _write_text(path, "\n".join(lines) + "\n")


def read_sweep(path) -> list[tuple[float, float, int, float]]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0].strip() != "p,p_out,trial,error":
        raise ParseError(f"{path}:1: unexpected header")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 4:
            raise ParseError(f"{path}:{lineno}: expected 4 fields")
        rows.append(
            (
                _parse_float(parts[0], path, lineno),
                _parse_float(parts[1], path, lineno),
                int(parts[2]),
                _parse_float(parts[3], path, lineno),
            )
        )
    return rows


def write_aggregate(rows: list[tuple[str, float, int, float]], path) -> None:
    _write_text(path, aggregate_results(rows))


def aggregate_results(rows: list[tuple[str, float, int, float]]) -> str:
    """Mean-error table: one row per method, one column per outlier level."""
    methods = sorted({r[0] for r in rows})
    levels = sorted({r[1] for r in rows})
    lines = ["method," + ",".join(_fmt(p) for p in levels)]
    for m in methods:
        cells = []
        for p in levels:
            errs = [r[3] for r in rows if r[0] == m and r[1] == p]
            cells.append(_fmt(float(np.mean(errs))) if errs else "")
        lines.append(m + "," + ",".join(cells))
    return "\n".join(lines) + "\n"
