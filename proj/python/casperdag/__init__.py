"""Differentiable DAG structure learning: critic-scored fits, baselines, metrics."""

from ._core import (
    AcyclicityForm,
    CasperConfig,
    FitMode,
    GroundTruthDag,
    MetricsReport,
    OuterRecord,
    TrainResult,
    TrainingError,
    casper_fit,
    default_linear_config,
    default_mlp_config,
    evaluate,
    generate_er,
    generate_sf,
    h_value,
    ingest_csv,
    is_acyclic,
    notears_fit,
    notears_mlp_fit,
    prune,
    simulate_gp,
    simulate_linear,
)

__all__ = [
    "AcyclicityForm",
    "CasperConfig",
    "FitMode",
    "GroundTruthDag",
    "MetricsReport",
    "OuterRecord",
    "TrainResult",
    "TrainingError",
    "casper_fit",
    "default_linear_config",
    "default_mlp_config",
    "evaluate",
    "generate_er",
    "generate_sf",
    "h_value",
    "ingest_csv",
    "is_acyclic",
    "notears_fit",
    "notears_mlp_fit",
    "prune",
    "simulate_gp",
    "simulate_linear",
]

__version__ = "0.1.0"
