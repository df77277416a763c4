"""Class-confidence-driven dynamic thresholding and re-sampling for
semi-supervised point-cloud classification, plus a config-driven experiment
harness with fixed-threshold, curriculum-style, and supervised baselines."""

from .core import (
    ConfigError,
    Instance,
    PointCloud,
    ProbabilityVector,
    RunConfig,
    UnlabeledPrediction,
    validate_config,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "Instance",
    "PointCloud",
    "ProbabilityVector",
    "RunConfig",
    "UnlabeledPrediction",
    "validate_config",
    "__version__",
]
