from .core import (
    DEFAULT_ESTIMATORS,
    EstimatorConfig,
    EstimatorResult,
    assemble_constraints,
    default_cost,
    default_polyak_init,
    fit,
    fit_slack,
    max_violation,
    polyak_step,
    slack_system,
)
from .registry import EstimatorRegistry

__all__ = [
    "DEFAULT_ESTIMATORS",
    "EstimatorConfig",
    "EstimatorRegistry",
    "EstimatorResult",
    "assemble_constraints",
    "default_cost",
    "default_polyak_init",
    "fit",
    "fit_slack",
    "max_violation",
    "polyak_step",
    "slack_system",
]
