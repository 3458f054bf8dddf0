"""Command line interface.

    flowscape simulate --out runs/exp --seed 7 --p-out 0.4 --trials 20
    flowscape maps --centroids runs/exp/trial_000/centroids.csv --out maps.csv
    flowscape cluster --maps maps.csv --out runs/clu --seed 11 --p 0.5
    flowscape evaluate --manifest runs/exp/manifest.json --run proposed,kmedoids \
        --seed 3 --out runs/eval
    flowscape count --centroids trial.csv --box 9 0 11 1 --bucket 60 --out counts.csv
    flowscape render --maps maps.csv --out imgs

Options may come from a JSON config file (``--config``); explicit flags win.
``FLOWSCAPE_JOBS`` supplies the default for ``--jobs``.  Outputs are
byte-identical across reruns with the same seed and do not depend on the
job count.  Exit codes: 0 success, 2 invalid input, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .baselines import (
    GroundTruth,
    clustering_error,
    dbscan,
    dbscan_eps,
    kmeans_angular,
    kmedoids_angular,
)
from .clustering import PipelineConfig, run_pipeline
from .counting import CountBox, count_exit_box
from .errors import (
    DegenerateCluster,
    FlowscapeError,
    GridSpecMismatch,
    InsufficientData,
    InvalidExperiment,
    ParseError,
    SolverFailure,
)
from .grid import CentroidStream, GridSpec
from .maps import DataMatrix, build_data_matrix, stream_to_maps
from .selfexpress import SolverConfig, solve_coefficients
from .sim import (
    ExperimentSpec,
    SimParams,
    default_scene,
    experiment_schedule,
    generate_experiment,
    simulate_window,
    window_seed,
)
from . import io

MANIFEST_FORMAT = "flowscape-experiment/1"
METHODS = ("proposed", "kmeans", "kmedoids", "dbscan")


class CLIError(Exception):
    """Invalid invocation or input; maps to exit code 2."""


# -- config file / flag resolution ----------------------------------------

_KNOWN_KEYS: set[str] = set()


def _opt(parser, *names, **kwargs) -> None:
    """Add an option whose default may come from the JSON config file."""
    action = parser.add_argument(*names, **kwargs)
    _KNOWN_KEYS.add(action.dest)


def _load_config(args) -> dict:
    path = getattr(args, "config", None)
    if path is None:
        return {}
    cfg = io.read_manifest(path)
    if not isinstance(cfg, dict):
        raise CLIError(f"{path}: config must be a JSON object")
    unknown = sorted(set(cfg) - _KNOWN_KEYS)
    if unknown:
        raise CLIError(f"{path}: unknown config keys: {', '.join(unknown)}")
    return cfg


def _get(args, cfg, name, default=None):
    value = getattr(args, name, None)
    if value is not None:
        return value
    if name in cfg:
        return cfg[name]
    return default


def _require_seed(args, cfg, command: str) -> int:
    seed = _get(args, cfg, "seed")
    if seed is None:
        raise CLIError(f"{command} requires an explicit --seed")
    return int(seed)


def _jobs(args, cfg) -> int:
    env = os.environ.get("FLOWSCAPE_JOBS")
    jobs = _get(args, cfg, "jobs", int(env) if env else 1)
    jobs = int(jobs)
    if jobs < 1:
        raise CLIError("--jobs must be at least 1")
    return jobs


def _parse_p(text: str) -> list[float]:
    """A single value, or an inclusive start:step:stop sweep."""
    if ":" not in text:
        return [float(text)]
    parts = text.split(":")
    if len(parts) != 3:
        raise CLIError(f"--p sweep must be start:step:stop, got {text!r}")
    start, step, stop = (float(t) for t in parts)
    if step <= 0 or stop < start:
        raise CLIError(f"--p sweep must increase, got {text!r}")
    n = int(np.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + i * step, 12) for i in range(n)]


def _trial_token(seed: int, trial: int) -> int:
    """Independent integer seed for one trial of one experiment."""
    return int(np.random.SeedSequence(entropy=(seed, trial)).generate_state(1)[0])


# -- simulate --------------------------------------------------------------

def _sim_params(args, cfg) -> SimParams:
    base = SimParams()
    return SimParams(
        speed_mean=float(_get(args, cfg, "speed_mean", base.speed_mean)),
        speed_var=float(_get(args, cfg, "speed_var", base.speed_var)),
        detect_prob=float(_get(args, cfg, "detect_prob", base.detect_prob)),
        spawn_rate=float(_get(args, cfg, "spawn_rate", base.spawn_rate)),
        lateral_sigma=float(_get(args, cfg, "lateral_sigma", base.lateral_sigma)),
        deviant_fraction=float(
            _get(args, cfg, "deviant_fraction", base.deviant_fraction)
        ),
    )


def _config_ids(args, cfg) -> tuple[int, ...] | None:
    raw = _get(args, cfg, "configs")
    if raw is None:
        return None
    if isinstance(raw, str):
        raw = raw.split(",")
    return tuple(int(c) for c in raw)


def cmd_simulate(args, cfg) -> None:
    seed = _require_seed(args, cfg, "simulate")
    out = Path(_get(args, cfg, "out", "."))
    scene = default_scene()
    params = _sim_params(args, cfg)
    spec = ExperimentSpec(
        n_maps=int(_get(args, cfg, "n_maps", 576)),
        window=float(_get(args, cfg, "window", 300.0)),
        p_out=float(_get(args, cfg, "p_out", 0.0)),
        n_trials=int(_get(args, cfg, "trials", 1)),
    )
    config_ids = _config_ids(args, cfg)
    shuffled = bool(_get(args, cfg, "shuffled", False))
    grid = scene.default_grid(float(_get(args, cfg, "cell_size", 1.0)))

    out.mkdir(parents=True, exist_ok=True)
    trials = []
    for t in range(spec.n_trials):
        entropy = (seed, t)
        sched = experiment_schedule(scene, spec, entropy, config_ids, shuffled)
        streams = []
        tid_base = 0
        for i in range(spec.n_maps):
            stream = simulate_window(
                scene,
                config_id=sched.config_id(i),
                params=params,
                window=spec.window,
                outlier=bool(sched.is_outlier[i]),
                seed=window_seed(entropy, i),
            )
            if len(stream):
                stream = replace(
                    stream,
                    t=stream.t + i * spec.window,
                    track_id=stream.track_id + tid_base,
                )
                tid_base += int(stream.track_id.max()) + 1
                streams.append(stream)
        full = CentroidStream.concatenate(streams)
        rel = Path(f"trial_{t:03d}") / "centroids.csv"
        (out / rel).parent.mkdir(parents=True, exist_ok=True)
        io.write_centroids(full, out / rel)
        trials.append(
            {
                "trial": t,
                "entropy": list(entropy),
                "centroids": str(rel),
                "labels": [int(v) for v in sched.labels],
                "is_outlier": [bool(v) for v in sched.is_outlier],
            }
        )
    manifest = {
        "format": MANIFEST_FORMAT,
        "seed": seed,
        "shuffled": shuffled,
        "configs": list(config_ids) if config_ids is not None else
                   list(range(scene.n_configs)),
        "grid": grid.to_dict(),
        "params": {
            "speed_mean": params.speed_mean,
            "speed_var": params.speed_var,
            "detect_prob": params.detect_prob,
            "spawn_rate": params.spawn_rate,
            "lateral_sigma": params.lateral_sigma,
            "deviant_fraction": params.deviant_fraction,
        },
        "experiment": {
            "n_maps": spec.n_maps,
            "window": spec.window,
            "p_out": spec.p_out,
            "n_trials": spec.n_trials,
        },
        "trials": trials,
    }
    io.write_manifest(manifest, out / "manifest.json")
    print(f"wrote {spec.n_trials} trial(s) under {out}")


# -- maps ------------------------------------------------------------------

def _grid_from_flags(args, cfg) -> GridSpec:
    return GridSpec(
        origin=(
            float(_get(args, cfg, "origin_x", 0.0)),
            float(_get(args, cfg, "origin_y", 0.0)),
        ),
        width=float(_get(args, cfg, "width", 20.0)),
        height=float(_get(args, cfg, "height", 20.0)),
        cell_size=float(_get(args, cfg, "cell_size", 1.0)),
    )


def _input_path(args, cfg, name: str, command: str):
    path = _get(args, cfg, name)
    if path is None:
        raise CLIError(f"{command} requires --{name}")
    return path


def cmd_maps(args, cfg) -> None:
    stream = io.read_centroids(_input_path(args, cfg, "centroids", "maps"))
    grid = _grid_from_flags(args, cfg)
    window = float(_get(args, cfg, "window", 300.0))
    start = _get(args, cfg, "start")
    maps = stream_to_maps(
        stream, grid, window, None if start is None else float(start)
    )
    out = Path(_get(args, cfg, "out", "maps.csv"))
    if out.parent != Path(""):
        out.parent.mkdir(parents=True, exist_ok=True)
    io.write_maps(maps, out)
    print(f"wrote {len(maps)} maps to {out}")


# -- cluster ---------------------------------------------------------------

def _scaled_image(values: np.ndarray) -> np.ndarray:
    top = float(values.max()) if values.size else 0.0
    return values / top if top > 0 else np.zeros_like(values)


def cmd_cluster(args, cfg) -> None:
    seed = _require_seed(args, cfg, "cluster")
    maps = io.read_maps(_input_path(args, cfg, "maps", "cluster"))
    dm = build_data_matrix(maps)
    gamma = _get(args, cfg, "gamma")
    pipe_cfg = PipelineConfig(
        p=float(_get(args, cfg, "p", 0.5)),
        th_nsi=float(_get(args, cfg, "th_nsi", 0.93)),
        gamma=None if gamma is None else int(gamma),
        eps_eig=float(_get(args, cfg, "eps_eig", 1e-3)),
        energy=float(_get(args, cfg, "energy", 0.9)),
        seed=seed,
    )
    result = run_pipeline(dm, pipe_cfg, jobs=_jobs(args, cfg))

    out = Path(_get(args, cfg, "out", "."))
    out.mkdir(parents=True, exist_ok=True)
    io.write_labeling(result.labeling, dm.window_starts, out / "labeling.json")
    io.write_irregularity(
        result.irregularity, dm.window_starts, out / "irregularity.csv"
    )
    io.write_matrix(result.coefficients, out / "coefficients.csv")
    io.write_matrix(result.nsi_premerge, out / "nsi.csv")
    classes_dir = out / "classes"
    classes_dir.mkdir(exist_ok=True)
    labels = result.labels
    for k in range(result.n_classes):
        mean = dm.X[:, labels == k].mean(axis=1)
        image = _scaled_image(mean.reshape(dm.spec.rows, dm.spec.cols))
        io.write_pgm(image, classes_dir / f"class_{k:03d}.pgm")
    n_irr = int(np.sum(labels < 0))
    print(
        f"{dm.m} maps -> {result.n_classes} classes, {n_irr} irregular "
        f"(K_est={result.k_est}, gamma={result.gamma})"
    )


# -- evaluate --------------------------------------------------------------

def _load_truth(trial_entry) -> GroundTruth:
    return GroundTruth(
        labels=np.asarray(trial_entry["labels"], dtype=int),
        is_outlier=np.asarray(trial_entry["is_outlier"], dtype=bool),
    )


def _trial_matrix(manifest: dict, manifest_path: Path, trial_entry) -> DataMatrix:
    grid = GridSpec.from_dict(manifest["grid"])
    window = float(manifest["experiment"]["window"])
    n_maps = int(manifest["experiment"]["n_maps"])
    stream = io.read_centroids(manifest_path.parent / trial_entry["centroids"])
    maps = stream_to_maps(stream, grid, window, start=0.0)
    dm = build_data_matrix(maps)
    if dm.m != n_maps:
        raise CLIError(
            f"trial {trial_entry['trial']}: {dm.m} usable maps, expected {n_maps}"
        )
    return dm


def _run_methods(args, cfg, manifest, manifest_path, trial_entry, methods, p_values):
    """Errors of the requested methods on one trial.

    Returns (results_rows, sweep_rows).  The self-expressive coefficients
    are solved once per trial and shared across the p sweep.
    """
    dm = _trial_matrix(manifest, manifest_path, trial_entry)
    truth = _load_truth(trial_entry)
    trial = int(trial_entry["trial"])
    p_out = float(manifest["experiment"]["p_out"])
    jobs = _jobs(args, cfg)
    seeded = [m for m in methods if m != "dbscan"]
    token = _trial_token(_require_seed(args, cfg, "evaluate"), trial) if seeded else 0
    k_default = len(np.unique(truth.labels[truth.labels >= 0]))
    K = int(_get(args, cfg, "k", k_default))
    replicates = int(_get(args, cfg, "replicates", 10))
    rows, sweep = [], []
    for method in methods:
        if method == "proposed":
            C = solve_coefficients(dm.X, SolverConfig(), jobs=jobs)
            gamma = _get(args, cfg, "gamma")
            for p in p_values:
                pipe_cfg = PipelineConfig(
                    p=float(p),
                    th_nsi=float(_get(args, cfg, "th_nsi", 0.93)),
                    gamma=None if gamma is None else int(gamma),
                    eps_eig=float(_get(args, cfg, "eps_eig", 1e-3)),
                    energy=float(_get(args, cfg, "energy", 0.9)),
                    seed=token,
                )
                result = run_pipeline(dm, pipe_cfg, coefficients=C)
                err = clustering_error(result.labels, truth)
                if len(p_values) > 1:
                    sweep.append((float(p), p_out, trial, err))
                else:
                    rows.append(("proposed", p_out, trial, err))
        elif method == "kmeans":
            pred = kmeans_angular(dm.X, K, replicates=replicates, seed=token)
            rows.append(("kmeans", p_out, trial, clustering_error(pred, truth)))
        elif method == "kmedoids":
            pred = kmedoids_angular(dm.X, K, replicates=replicates, seed=token)
            rows.append(("kmedoids", p_out, trial, clustering_error(pred, truth)))
        elif method == "dbscan":
            eps = _get(args, cfg, "eps")
            eps = dbscan_eps(dm.X) if eps is None else float(eps)
            pred = dbscan(dm.X, eps)
            rows.append(("dbscan", p_out, trial, clustering_error(pred, truth)))
        else:
            raise CLIError(f"unknown method {method!r}")
    return rows, sweep


def cmd_evaluate(args, cfg) -> None:
    manifest_path = Path(_get(args, cfg, "manifest", "manifest.json"))
    manifest = io.read_manifest(manifest_path)
    if manifest.get("format") != MANIFEST_FORMAT:
        raise CLIError(f"{manifest_path}: not a flowscape experiment manifest")
    trials = manifest["trials"]
    trial_sel = _get(args, cfg, "trial")
    if trial_sel is not None:
        trials = [t for t in trials if t["trial"] == int(trial_sel)]
        if not trials:
            raise CLIError(f"trial {trial_sel} not in manifest")
    out = Path(_get(args, cfg, "out", "."))
    out.mkdir(parents=True, exist_ok=True)

    rows, sweep = [], []
    labels_path = _get(args, cfg, "labels")
    if labels_path is not None:
        if len(trials) != 1:
            raise CLIError("--labels needs --trial to pick the ground truth")
        labeling, _ = io.read_labeling(labels_path)
        truth = _load_truth(trials[0])
        if len(labeling.labels) != len(truth.labels):
            raise CLIError(
                f"{labels_path}: {len(labeling.labels)} labels for "
                f"{len(truth.labels)} windows"
            )
        err = clustering_error(labeling.labels, truth)
        rows.append(
            ("labels", float(manifest["experiment"]["p_out"]),
             int(trials[0]["trial"]), err)
        )

    run = _get(args, cfg, "run")
    if run is not None:
        methods = run.split(",") if isinstance(run, str) else list(run)
        bad = [m for m in methods if m not in METHODS]
        if bad:
            raise CLIError(f"unknown methods: {', '.join(bad)}")
        p_values = _parse_p(str(_get(args, cfg, "p", "0.5")))
        for trial_entry in trials:
            r, s = _run_methods(
                args, cfg, manifest, manifest_path, trial_entry, methods, p_values
            )
            rows.extend(r)
            sweep.extend(s)

    if not rows and not sweep:
        raise CLIError("evaluate needs --labels and/or --run")
    if rows:
        io.write_results(rows, out / "results.csv")
        io.write_aggregate(rows, out / "summary.csv")
    if sweep:
        io.write_sweep(sweep, out / "sweep.csv")
    for name in ("results.csv", "summary.csv") if rows else ():
        print(f"wrote {out / name}")
    if sweep:
        print(f"wrote {out / 'sweep.csv'}")


# -- count -----------------------------------------------------------------

def cmd_count(args, cfg) -> None:
    stream = io.read_centroids(_input_path(args, cfg, "centroids", "count"))
    box_spec = _get(args, cfg, "box")
    if box_spec is None:
        raise CLIError("count requires --box X_MIN Y_MIN X_MAX Y_MAX")
    x0, y0, x1, y1 = (float(v) for v in box_spec)
    box = CountBox(x_min=x0, y_min=y0, x_max=x1, y_max=y1)
    bucket = float(_get(args, cfg, "bucket", 60.0))
    starts, counts = count_exit_box(stream, box, bucket)
    out = Path(_get(args, cfg, "out", "counts.csv"))
    if out.parent != Path(""):
        out.parent.mkdir(parents=True, exist_ok=True)
    io.write_counts(starts, counts, out)
    print(f"wrote {len(counts)} buckets to {out} (total {int(counts.sum())})")


# -- render ----------------------------------------------------------------

def cmd_render(args, cfg) -> None:
    maps_path = _get(args, cfg, "maps")
    matrix_path = _get(args, cfg, "matrix")
    if (maps_path is None) == (matrix_path is None):
        raise CLIError("render needs exactly one of --maps / --matrix")
    out = Path(_get(args, cfg, "out", "render"))
    if matrix_path is not None:
        M = io.read_matrix(matrix_path)
        if out.parent != Path(""):
            out.parent.mkdir(parents=True, exist_ok=True)
        io.write_pgm(_scaled_image(np.abs(M)), out)
        print(f"wrote {out}")
        return
    maps = io.read_maps(maps_path)
    index = _get(args, cfg, "index")
    picked = list(range(len(maps))) if index is None else [int(index)]
    if any(not 0 <= i < len(maps) for i in picked):
        raise CLIError(f"--index out of range (file has {len(maps)} maps)")
    out.mkdir(parents=True, exist_ok=True)
    for i in picked:
        io.write_pgm(_scaled_image(maps[i].as_image()), out / f"map_{i:04d}.pgm")
    print(f"wrote {len(picked)} images under {out}")


# -- parser ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flowscape",
        description="Crowd-flow occupancy map clustering toolkit.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        _opt(p, "--config", help="JSON file of option defaults")
        _opt(p, "--jobs", type=int, help="parallel workers (env FLOWSCAPE_JOBS)")

    p = sub.add_parser("simulate", help="generate centroid streams + manifest")
    common(p)
    _opt(p, "--out", help="output directory")
    _opt(p, "--seed", type=int, help="master seed (required)")
    _opt(p, "--p-out", dest="p_out", type=float, help="outlier window fraction")
    _opt(p, "--trials", type=int, help="number of independent trials")
    _opt(p, "--n-maps", dest="n_maps", type=int, help="windows per trial")
    _opt(p, "--window", type=float, help="window length in seconds")
    _opt(p, "--configs", help="comma list of config ids (default: all)")
    _opt(p, "--shuffled", action="store_const", const=True, default=None,
         help="shuffle class order instead of contiguous runs")
    _opt(p, "--cell-size", dest="cell_size", type=float, help="grid cell size")
    _opt(p, "--spawn-rate", dest="spawn_rate", type=float)
    _opt(p, "--speed-mean", dest="speed_mean", type=float)
    _opt(p, "--speed-var", dest="speed_var", type=float)
    _opt(p, "--detect-prob", dest="detect_prob", type=float)
    _opt(p, "--lateral-sigma", dest="lateral_sigma", type=float)
    _opt(p, "--deviant-fraction", dest="deviant_fraction", type=float)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("maps", help="centroid stream -> occupancy maps")
    common(p)
    _opt(p, "--centroids", help="input centroid CSV")
    _opt(p, "--out", help="output maps CSV")
    _opt(p, "--window", type=float, help="window length in seconds")
    _opt(p, "--start", type=float, help="timeline origin (default: inferred)")
    _opt(p, "--width", type=float)
    _opt(p, "--height", type=float)
    _opt(p, "--cell-size", dest="cell_size", type=float)
    _opt(p, "--origin-x", dest="origin_x", type=float)
    _opt(p, "--origin-y", dest="origin_y", type=float)
    p.set_defaults(func=cmd_maps)

    p = sub.add_parser("cluster", help="cluster occupancy maps")
    common(p)
    _opt(p, "--maps", help="input maps CSV")
    _opt(p, "--out", help="output directory")
    _opt(p, "--seed", type=int, help="pipeline seed (required)")
    _opt(p, "--p", type=float, help="irregular fraction to set aside")
    _opt(p, "--th-nsi", dest="th_nsi", type=float, help="merge threshold")
    _opt(p, "--gamma", type=int, help="over-segmentation count")
    _opt(p, "--eps-eig", dest="eps_eig", type=float, help="eigenvalue cutoff")
    _opt(p, "--energy", type=float, help="basis energy fraction")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("evaluate", help="score labelings / run method benchmark")
    common(p)
    _opt(p, "--manifest", help="experiment manifest JSON")
    _opt(p, "--out", help="output directory")
    _opt(p, "--labels", help="precomputed labeling JSON to score")
    _opt(p, "--run", help="comma list of methods: " + ",".join(METHODS))
    _opt(p, "--trial", type=int, help="restrict to one trial")
    _opt(p, "--seed", type=int, help="seed for seeded methods")
    _opt(p, "--p", help="irregular fraction, or sweep start:step:stop")
    _opt(p, "--th-nsi", dest="th_nsi", type=float)
    _opt(p, "--gamma", type=int)
    _opt(p, "--eps-eig", dest="eps_eig", type=float)
    _opt(p, "--energy", type=float)
    _opt(p, "--k", type=int, help="cluster count for kmeans/kmedoids")
    _opt(p, "--replicates", type=int, help="restarts for kmeans/kmedoids")
    _opt(p, "--eps", type=float, help="dbscan radius (default: elbow rule)")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("count", help="exit-box throughput counts")
    common(p)
    _opt(p, "--centroids", help="input centroid CSV")
    _opt(p, "--box", nargs=4, type=float,
         metavar=("X_MIN", "Y_MIN", "X_MAX", "Y_MAX"))
    _opt(p, "--bucket", type=float, help="bucket length in seconds")
    _opt(p, "--out", help="output counts CSV")
    p.set_defaults(func=cmd_count)

    p = sub.add_parser("render", help="maps or matrix -> PGM images")
    common(p)
    _opt(p, "--maps", help="maps CSV; writes one PGM per map")
    _opt(p, "--matrix", help="matrix CSV; writes a single PGM")
    _opt(p, "--index", type=int, help="render only this map")
    _opt(p, "--out", help="output directory (maps) or file (matrix)")
    p.set_defaults(func=cmd_render)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _load_config(args)
        args.func(args, cfg)
    except (SolverFailure, DegenerateCluster) as e:
        print(f"flowscape {args.command}: failure: {e}", file=sys.stderr)
        return 3
    except (
        CLIError,
        ParseError,
        InvalidExperiment,
        GridSpecMismatch,
        InsufficientData,
        FlowscapeError,
        ValueError,
        OSError,
    ) as e:
        print(f"flowscape {args.command}: error: {e}", file=sys.stderr)
        return 2
    except np.linalg.LinAlgError as e:
        print(f"flowscape {args.command}: failure: {e}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
