"""Python bindings for the repscen library and pipeline.

Instances, configurations and models are plain dicts with the same layout as
the JSON files the command-line tool reads and writes.
"""

from ._repscen import (
    ArtifactError,
    BackendError,
    ConfigError,
    Error,
    MipSolution,
    config_hash,
    default_config,
    evaluate,
    evaluate_phi,
    extract_features,
    feature_names,
    featurize,
    find_representative,
    generate,
    generate_instance,
    label,
    predict,
    report,
    run,
    solve_exact,
    solve_mps,
    surrogate_decision,
    train,
)

__all__ = [
    "ArtifactError",
    "BackendError",
    "ConfigError",
    "Error",
    "MipSolution",
    "config_hash",
    "default_config",
    "evaluate",
    "evaluate_phi",
    "extract_features",
    "feature_names",
    "featurize",
    "find_representative",
    "generate",
    "generate_instance",
    "label",
    "predict",
    "report",
    "run",
    "solve_exact",
    "solve_mps",
    "surrogate_decision",
    "train",
]
