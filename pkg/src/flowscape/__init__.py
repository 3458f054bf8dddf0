"""Crowd-flow occupancy map clustering and simulation toolkit."""

from .baselines import (
    GroundTruth,
    clustering_error,
    dbscan,
    dbscan_eps,
    kmeans_angular,
    kmedoids_angular,
)
from .clustering import (
    IRREGULAR_LABEL,
    Labeling,
    PipelineConfig,
    PipelineResult,
    build_affinity,
    estimate_cluster_count,
    merge_clusters,
    reclassify_irregular,
    run_pipeline,
    spectral_segment,
)
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
from .grid import BinaryGrid, CentroidStream, GridSpec, rasterize_centroids
from .maps import (
    DataMatrix,
    OccupancyMap,
    aggregate_window,
    build_data_matrix,
    occupancy_from_stream,
    stream_to_maps,
)
from .selfexpress import (
    RegularSplit,
    SolverConfig,
    coefficient_feasibility,
    irregularity,
    solve_coefficients,
    split_regular,
)
from .sim import (
    ExperimentSchedule,
    ExperimentSpec,
    SceneSpec,
    SimParams,
    default_scene,
    experiment_schedule,
    generate_experiment,
    ideal_config_map,
    path_length,
    simulate_window,
    window_seed,
)
from .subspaces import SubspaceBasis, nsi, subspace_basis
from . import io

__version__ = "0.1.0"

__all__ = [
    "aggregate_window",
    "BinaryGrid",
    "build_affinity",
    "build_data_matrix",
    "CentroidStream",
    "clustering_error",
    "coefficient_feasibility",
    "count_exit_box",
    "CountBox",
    "DataMatrix",
    "dbscan",
    "dbscan_eps",
    "default_scene",
    "DegenerateCluster",
    "estimate_cluster_count",
    "experiment_schedule",
    "ExperimentSchedule",
    "ExperimentSpec",
    "FlowscapeError",
    "generate_experiment",
    "GridSpec",
    "GridSpecMismatch",
    "GroundTruth",
    "ideal_config_map",
    "InsufficientData",
    "InvalidExperiment",
    "io",
    "IRREGULAR_LABEL",
    "irregularity",
    "kmeans_angular",
    "kmedoids_angular",
    "Labeling",
    "merge_clusters",
    "nsi",
    "occupancy_from_stream",
    "OccupancyMap",
    "ParseError",
    "path_length",
    "PipelineConfig",
    "PipelineResult",
    "rasterize_centroids",
    "reclassify_irregular",
    "RegularSplit",
    "run_pipeline",
    "SceneSpec",
    "SimParams",
    "simulate_window",
    "solve_coefficients",
    "SolverConfig",
    "SolverFailure",
    "spectral_segment",
    "split_regular",
    "stream_to_maps",
    "subspace_basis",
    "SubspaceBasis",
    "window_seed",
]
