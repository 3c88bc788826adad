"""Persistent homology of segmented voxel volumes, persistence images and NMF.

Volumes are numpy arrays indexed (z, y, x).
"""

from ._core import (
    ConsistencyError,
    DomainError,
    EmptyFeatureError,
    Error,
    FormatError,
    Grid,
    IoError,
    LookupError,
    ParameterError,
    PIParams,
    RunConfig,
    StageError,
    UnsupportedPairError,
    __version__,
    feature_region,
    fit_grid,
    load_config,
    nmf,
    persistence,
    persistence_image,
    run_pipeline,
    run_stage,
    signed_distance,
)

STAGES = ("sdt", "pd", "pi", "nmf", "invert", "plot")

__all__ = [
    "ConsistencyError",
    "DomainError",
    "EmptyFeatureError",
    "Error",
    "FormatError",
    "Grid",
    "IoError",
    "LookupError",
    "ParameterError",
    "PIParams",
    "RunConfig",
    "STAGES",
    "StageError",
    "UnsupportedPairError",
    "__version__",
    "feature_region",
    "fit_grid",
    "load_config",
    "nmf",
    "persistence",
    "persistence_image",
    "run_pipeline",
    "run_stage",
    "signed_distance",
]
