"""Omnidirectional slicing, sphere view graphs and graph classification heads."""

from ._core import (
    ArgumentError,
    ConfigError,
    Error,
    FormatError,
    IoError,
    NumericError,
    auroc,
    balanced_accuracy,
    config_keys,
    coulomb_energy,
    delaunay,
    f1,
    hop_weight,
    load_nrrd,
    mcc,
    run_benchmark,
    slice_volume,
    sphere_points,
    stratified_folds,
    view_graph,
)

__all__ = [
    "ArgumentError",
    "ConfigError",
    "Error",
    "FormatError",
    "IoError",
    "NumericError",
    "auroc",
    "balanced_accuracy",
    "config_keys",
    "coulomb_energy",
    "delaunay",
    "f1",
    "hop_weight",
    "load_nrrd",
    "mcc",
    "run_benchmark",
    "slice_volume",
    "sphere_points",
    "stratified_folds",
    "view_graph",
]
