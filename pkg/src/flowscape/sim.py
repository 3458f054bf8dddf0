"""Synthetic crowd simulator for a square hub floor with wall doors.

Regular five-minute windows carry passengers along one of ten path
configurations (the ground-truth classes).  Outlier windows keep part of
the normal traffic but reroute the rest through a shared detour: those
passengers leave their path early, wander through a few interior
waypoints (or stroll the east-wall retail promenade), and return to the
normal course near the end.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .baselines import GroundTruth
from .errors import InvalidExperiment
from .grid import CentroidStream, GridSpec
from .maps import DataMatrix, build_data_matrix, occupancy_from_stream

# Detour waypoints stay this far from the walls; the east-wall retail
# promenade (anchor loop below) sits clear of every regular lane, so a
# stroll along it is its own signature.
WAYPOINT_MARGIN = 3.5
PROMENADE = ((16.0, 4.5), (16.0, 15.5), (15.3, 15.0), (15.3, 5.0))


@dataclass(frozen=True, eq=False)
class SceneSpec:
    """Floor geometry: square side, wall doors, paths, and path configs."""

    side: float
    doors: np.ndarray
    paths: tuple[np.ndarray, ...]
    configs: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        doors = np.asarray(self.doors, dtype=float)
        on_wall = (doors == 0.0) | (doors == self.side)
        if not np.all(on_wall.any(axis=1)):
            raise ValueError("every door must lie on the square boundary")
        if any(len(c) == 0 for c in self.configs):
            raise ValueError("every config needs at least one path")
        sets = [frozenset(c) for c in self.configs]
        if len(set(sets)) != len(sets):
            raise ValueError("configs must be pairwise distinct")
        for a in sets:
            for b in sets:
                if a < b:
                    raise ValueError("no config may be a subset of another")
        object.__setattr__(self, "doors", doors)
        object.__setattr__(
            self, "paths", tuple(np.asarray(p, dtype=float) for p in self.paths)
        )

    @property
    def n_configs(self) -> int:
        return len(self.configs)

    def default_grid(self, cell_size: float = 1.0) -> GridSpec:
        return GridSpec(
            origin=(0.0, 0.0), width=self.side, height=self.side, cell_size=cell_size
        )


@dataclass(frozen=True)
class SimParams:
    """Passenger dynamics and sensing parameters."""

    speed_mean: float = 1.4
    speed_var: float = 0.05
    detect_prob: float = 0.96
    spawn_rate: float = 0.40
    lateral_sigma: float = 0.5
    wobble_width: float = 0.11
    deviant_fraction: float = 0.46
    tour_fraction: float = 0.05
    tour_jitter: float = 0.6
    quiet_fraction: float = 0.0
    quiet_factor: float = 0.5

    def __post_init__(self) -> None:
        if not (0.0 < self.detect_prob <= 1.0):
            raise ValueError("detect_prob must be in (0, 1]")
        if not self.spawn_rate > 0:
            raise ValueError("spawn_rate must be positive")
        if self.wobble_width < 0:
            raise ValueError("wobble_width must be nonnegative")
        if not (0.0 < self.deviant_fraction < 1.0):
            raise ValueError("deviant_fraction must be in (0, 1)")
        if self.tour_jitter < 0:
            raise ValueError("tour_jitter must be nonnegative")
        if not (0.0 <= self.tour_fraction < 1.0):
            raise ValueError("tour_fraction must be in [0, 1)")
        if not (0.0 <= self.quiet_fraction < 1.0):
            raise ValueError("quiet_fraction must be in [0, 1)")
        if not (0.0 < self.quiet_factor <= 1.0):
            raise ValueError("quiet_factor must be in (0, 1]")


@dataclass(frozen=True)
class ExperimentSpec:
    """Shape of one simulated dataset."""

    n_maps: int = 576
    window: float = 300.0
    p_out: float = 0.0
    n_trials: int = 20

    def __post_init__(self) -> None:
        if not (0.0 <= self.p_out < 1.0):
            raise ValueError("p_out must be in [0, 1)")
        if self.n_maps < 1 or self.window <= 0 or self.n_trials < 1:
            raise ValueError("n_maps, window, n_trials must be positive")


def _cumlen(pts: np.ndarray) -> np.ndarray:
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    return np.concatenate([[0.0], np.cumsum(seg)])


def path_length(pts: np.ndarray) -> float:
    return float(_cumlen(pts)[-1])


def _point_at(pts: np.ndarray, cum: np.ndarray, arc: np.ndarray) -> np.ndarray:
    x = np.interp(arc, cum, pts[:, 0])
    y = np.interp(arc, cum, pts[:, 1])
    return np.column_stack([x, y])


def _splice_detour(
    pts: np.ndarray, waypoints: np.ndarray, u1: float, u2: float
) -> np.ndarray:
    """Replace the (u1, u2) arc-length span of a polyline by waypoints."""
    cum = _cumlen(pts)
    a, b = u1 * cum[-1], u2 * cum[-1]
    head_mask = cum < a
    tail_mask = cum > b
    head = np.vstack([pts[head_mask], _point_at(pts, cum, np.array([a]))])
    tail = np.vstack([_point_at(pts, cum, np.array([b])), pts[tail_mask]])
    return np.vstack([head, waypoints, tail])


def _offset_path(pts: np.ndarray, delta: float) -> np.ndarray:
    """Shift a polyline sideways by delta along per-vertex normals."""
    d = np.diff(pts, axis=0)
    n = np.column_stack([-d[:, 1], d[:, 0]])
    n /= np.linalg.norm(n, axis=1)[:, None]
    v = np.vstack([n[:1], n[:-1] + n[1:], n[-1:]])
    v /= np.linalg.norm(v, axis=1)[:, None]
    return pts + delta * v


def default_scene(seed: int = 0) -> SceneSpec:
    """The built-in 20 m floor: 8 doors, 11 paths, 10 path configurations.

    The layout is fixed (the seed is accepted for interface stability).
    Four configuration pairs are twin lanes between the same doors, offset
    well under a metre: each pair's ideal footprints occupy neighbouring
    grid columns, but the lateral wander of real traffic blurs the twins
    into look-alike maps, which is what separates the subspace pipeline
    from plain angular clustering.  Configurations overlap in fewer than
    half of their ideal cells, and all have near-equal total path length
    so that no class is systematically busier than another.
    """
    side = 20.0
    t1, t2 = side / 3.0, 2.0 * side / 3.0
    s1, s2 = (t1, 0.0), (t2, 0.0)
    e1, e2 = (side, t1), (side, t2)
    n1, n2 = (t1, side), (t2, side)
    w1, w2 = (0.0, t1), (0.0, t2)
    doors = np.array([s1, s2, e1, e2, n1, n2, w1, w2])
    paths = (
        np.array([s1, (6.63, 2.5), (6.63, 17.5), n1]),     # 0 west lane a
        np.array([s1, (7.01, 2.5), (7.01, 17.5), n1]),     # 1 west lane b
        np.array([s2, (12.07, 2.5), (12.07, 17.5), n2]),   # 2 east lane a
        np.array([s2, (13.83, 2.5), (13.83, 17.5), n2]),   # 3 east lane b
        np.array([w1, (2.5, 6.61), (17.5, 6.61), e1]),     # 4 low lane a
        np.array([w1, (2.5, 7.01), (17.5, 7.01), e1]),     # 5 low lane b
        np.array([w2, (2.5, 12.70), (17.5, 12.70), e2]),   # 6 high lane a
        np.array([w2, (2.5, 13.42), (17.5, 13.42), e2]),   # 7 high lane b
        np.array([s1, (10.0, 3.6), s2]),                 # 8 south hairpin
        np.array([n1, (10.0, 16.4), n2]),                # 9 north hairpin
        np.array([w1, (8.5, 11.5), n2]),                 # 10 cross diagonal
    )
    configs = (
        (0,),
        (1,),
        (2,),
        (3,),
        (4,),
        (5,),
        (6,),
        (7,),
        (8, 9),
        (10,),
    )
    return SceneSpec(side=side, doors=doors, paths=paths, configs=configs)


def ideal_config_map(
    scene: SceneSpec, config_id: int, grid: GridSpec, step: float = 0.05
) -> np.ndarray:
    """Binary map of the cells a config's paths pass through, noise-free."""
    cells = np.zeros(grid.n_cells)
    for pi in scene.configs[config_id]:
        pts = scene.paths[pi]
        cum = _cumlen(pts)
        arc = np.arange(0.0, cum[-1], step)
        pos = _point_at(pts, cum, arc)
        pos = np.clip(pos, 0.0, np.nextafter(scene.side, 0.0))
        row, col, ok = grid.cell_indices(pos[:, 0], pos[:, 1])
        cells[row[ok] * grid.cols + col[ok]] = 1.0
    return cells


def config_overlap(scene: SceneSpec, i: int, j: int, grid: GridSpec) -> float:
    """Shared ideal-map cells as a fraction of the smaller footprint."""
    a = ideal_config_map(scene, i, grid) > 0
    b = ideal_config_map(scene, j, grid) > 0
    return float(np.sum(a & b) / min(a.sum(), b.sum()))


def draw_speeds(rng: np.random.Generator, n: int, params: SimParams) -> np.ndarray:
    """Per-passenger walking speeds; non-positive draws are resampled."""
    s = rng.normal(params.speed_mean, np.sqrt(params.speed_var), n)
    while True:
        bad = s <= 0
        if not bad.any():
            return s
        s[bad] = rng.normal(params.speed_mean, np.sqrt(params.speed_var), bad.sum())


def _emit_lane(
    pts: np.ndarray,
    rate: float,
    n_sec: int,
    params: SimParams,
    rng: np.random.Generator,
    first_track: int,
):
    """Spawn passengers on one path and emit their per-second positions.

    Returns (t, x, y, track_id) for every detection opportunity (before
    the sensing coin-flip) and the number of passengers spawned.
    """
    spawn_sec = np.flatnonzero(rng.random(n_sec) < rate)
    n = spawn_sec.size
    if n == 0:
        empty = np.zeros(0)
        return empty, empty, empty, np.zeros(0, dtype=np.int64), 0
    spawn_t = spawn_sec + rng.random(n)
    speeds = draw_speeds(rng, n, params)
    offsets = rng.normal(0.0, params.lateral_sigma, n)
    cum = _cumlen(pts)
    length = cum[-1]
    k0 = np.ceil(spawn_t)
    k1 = np.minimum(np.ceil(spawn_t + length / speeds) - 1, n_sec - 1)
    counts = np.maximum(k1 - k0 + 1, 0).astype(int)
    total = int(counts.sum())
    if total == 0:
        empty = np.zeros(0)
        return empty, empty, empty, np.zeros(0, dtype=np.int64), n
    pax = np.repeat(np.arange(n), counts)
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
    ks = k0[pax] + (np.arange(total) - np.repeat(starts, counts))
    arc = (ks - spawn_t[pax]) * speeds[pax]
    pos = _point_at(pts, cum, arc)
    seg = np.clip(np.searchsorted(cum, arc, side="right") - 1, 0, len(cum) - 2)
    d = np.diff(pts, axis=0)
    normals = np.column_stack([-d[:, 1], d[:, 0]])
    normals /= np.linalg.norm(normals, axis=1)[:, None]
    pos = pos + offsets[pax, None] * normals[seg]
    return ks, pos[:, 0], pos[:, 1], (first_track + pax).astype(np.int64), n


def simulate_window(
    scene: SceneSpec,
    config_id: int,
    params: SimParams,
    window: float = 300.0,
    outlier: bool = False,
    seed: int | np.random.SeedSequence = 0,
) -> CentroidStream:
    """Centroid detections of one window of traffic on one configuration.

    Outlier windows split the configuration's flow: a `deviant_fraction`
    share of it leaves the normal path within its first 5-15% for a
    shared detour and rejoins within the last 5-15%.  Most such windows
    cut through 2-4 waypoints dropped uniformly over the floor interior;
    a `tour_fraction` of them instead send the deviants on a loop along
    the east-wall promenade, entered from the nearest wall door.  A
    `quiet_fraction` share of windows is off-peak and spawns at
    `quiet_factor` times the nominal rate.  Every path's centreline also
    drifts sideways by a per-window uniform draw bounded by
    `wobble_width`, the day-to-day wander of queue barriers within their
    corridor.  Detection is a per-second Bernoulli thinning and consumes
    randomness last, so runs that differ only in detect_prob see
    identical trajectories.
    """
    rng = np.random.default_rng(seed)
    n_sec = int(round(window))
    path_ids = scene.configs[config_id]
    rate = params.spawn_rate
    if rng.random() < params.quiet_fraction:
        rate *= params.quiet_factor
    w = params.wobble_width
    drifts = rng.uniform(-w, w, len(path_ids))
    base = [_offset_path(scene.paths[i], d) for i, d in zip(path_ids, drifts)]
    lanes: list[tuple[np.ndarray, float]] = []
    if outlier:
        host = base[int(rng.integers(len(base)))]
        u1 = rng.uniform(0.05, 0.15)
        u2 = rng.uniform(0.85, 0.95)
        if rng.random() < params.tour_fraction:
            anchors = np.asarray(PROMENADE)
            door = scene.doors[
                int(np.argmin(((scene.doors - anchors[0]) ** 2).sum(axis=1)))
            ]
            wps = anchors + rng.normal(0.0, params.tour_jitter, anchors.shape)
            detour = np.vstack([door, wps, door])
        else:
            n_wp = int(rng.integers(2, 5))
            lo, hi = WAYPOINT_MARGIN, scene.side - WAYPOINT_MARGIN
            wps = rng.uniform(lo, hi, size=(n_wp, 2))
            detour = _splice_detour(host, wps, u1, u2)
        detour_rate = rate * params.deviant_fraction * len(base)
        lanes.append((detour, detour_rate))
        base_rate = rate * (1.0 - params.deviant_fraction)
    else:
        base_rate = rate
    lanes.extend((pts, base_rate) for pts in base)

    parts = []
    next_track = 0
    for pts, rate in lanes:
        t, x, y, tid, n_spawned = _emit_lane(pts, rate, n_sec, params, rng, next_track)
        next_track += n_spawned
        if t.size:
            parts.append((t, x, y, tid))
    if not parts:
        z = np.zeros(0)
        return CentroidStream(z, z, z, np.zeros(0, dtype=np.int64))
    t = np.concatenate([p[0] for p in parts])
    x = np.concatenate([p[1] for p in parts])
    y = np.concatenate([p[2] for p in parts])
    tid = np.concatenate([p[3] for p in parts])
    detected = rng.random(t.size) < params.detect_prob
    order = np.argsort(t[detected], kind="stable")
    hi = np.nextafter(scene.side, 0.0)
    return CentroidStream(
        t=t[detected][order],
        x=np.clip(x[detected][order], 0.0, hi),
        y=np.clip(y[detected][order], 0.0, hi),
        track_id=tid[detected][order],
    )


def _round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


@dataclass(frozen=True, eq=False)
class ExperimentSchedule:
    """Per-window plan of one experiment: class labels and outlier slots.

    base_class gives the class whose traffic an outlier window carries;
    classes maps schedule class ids to scene config ids.
    """

    labels: np.ndarray
    is_outlier: np.ndarray
    base_class: np.ndarray
    classes: tuple[int, ...]

    def config_id(self, window: int) -> int:
        return self.classes[self.base_class[window]]


def experiment_schedule(
    scene: SceneSpec,
    spec: ExperimentSpec,
    seed,
    config_ids: tuple[int, ...] | None = None,
    shuffled: bool = False,
) -> ExperimentSchedule:
    """Lay out the windows of one experiment.

    Outlier windows are spread evenly over the timeline; regular windows
    run through the classes in contiguous blocks (or shuffled for stress
    tests) with class totals balanced to within one map.  Each outlier
    window carries the traffic of the class active at that point of the
    timeline.
    """
    classes = tuple(config_ids) if config_ids is not None else tuple(
        range(scene.n_configs)
    )
    if any(not 0 <= c < scene.n_configs for c in classes):
        raise InvalidExperiment("config id out of range")
    n = spec.n_maps
    n_out = _round_half_up(spec.p_out * n)
    n_reg = n - n_out
    K = len(classes)
    if n_reg < K:
        raise InvalidExperiment("every class needs at least one regular window")
    is_out = np.zeros(n, dtype=bool)
    if n_out:
        is_out[((np.arange(n_out) + 0.5) * n / n_out).astype(int)] = True
    counts = np.full(K, n_reg // K)
    counts[: n_reg % K] += 1
    class_seq = np.repeat(np.arange(K), counts)
    if shuffled:
        shuf_rng = np.random.default_rng(
            np.random.SeedSequence(entropy=seed, spawn_key=(n,))
        )
        class_seq = shuf_rng.permutation(class_seq)
    reg_pos = np.flatnonzero(~is_out)
    labels = np.full(n, -1, dtype=int)
    labels[reg_pos] = class_seq
    nxt = np.minimum(np.searchsorted(reg_pos, np.flatnonzero(is_out)), n_reg - 1)
    base_class = np.empty(n, dtype=int)
    base_class[reg_pos] = class_seq
    base_class[is_out] = class_seq[nxt]
    return ExperimentSchedule(
        labels=labels, is_outlier=is_out, base_class=base_class, classes=classes
    )


def window_seed(seed, window: int) -> np.random.SeedSequence:
    """Seed of one window, a pure function of (master seed, window index)."""
    return np.random.SeedSequence(entropy=seed, spawn_key=(window,))


def generate_experiment(
    scene: SceneSpec,
    params: SimParams,
    spec: ExperimentSpec,
    seed,
    grid: GridSpec | None = None,
    config_ids: tuple[int, ...] | None = None,
    shuffled: bool = False,
) -> tuple[DataMatrix, GroundTruth]:
    """One labeled dataset: n_maps occupancy maps plus ground truth.

    Window seeds derive from (seed, window_index) only, so any window can
    be regenerated independently and the result does not depend on
    simulation order.
    """
    if grid is None:
        grid = scene.default_grid()
    sched = experiment_schedule(scene, spec, seed, config_ids, shuffled)
    maps = []
    for i in range(spec.n_maps):
        stream = simulate_window(
            scene,
            config_id=sched.config_id(i),
            params=params,
            window=spec.window,
            outlier=bool(sched.is_outlier[i]),
            seed=window_seed(seed, i),
        )
        start = i * spec.window
        stream = replace(stream, t=stream.t + start)
        maps.append(occupancy_from_stream(stream, grid, start, spec.window))
    dm = build_data_matrix(maps)
    if dm.m != spec.n_maps:
        raise InvalidExperiment("simulation produced an empty window")
    return dm, GroundTruth(labels=sched.labels, is_outlier=sched.is_outlier)
