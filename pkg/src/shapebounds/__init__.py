"""Partial-identification intervals for a population mean under bounded
selection-probability ratios, tightened by shape constraints."""

from .bounds import (
    al_bounds,
    compute_bounds,
    log_concave_bounds,
    parametric_bounds,
    symmetric_bounds,
)
from .core import (
    ConstraintSpec,
    DegenerateInputError,
    EmptyPlausibilitySetError,
    IdentificationInterval,
    InvalidInputError,
    Sample,
    SolverError,
    StepFunction,
    WeightSolution,
    hajek_estimate,
    ks_distance,
    weighted_ecdf,
)

__version__ = "0.1.0"

__all__ = [
    "ConstraintSpec",
    "DegenerateInputError",
    "EmptyPlausibilitySetError",
    "IdentificationInterval",
    "InvalidInputError",
    "Sample",
    "SolverError",
    "StepFunction",
    "WeightSolution",
    "al_bounds",
    "compute_bounds",
    "hajek_estimate",
    "ks_distance",
    "log_concave_bounds",
    "parametric_bounds",
    "symmetric_bounds",
    "weighted_ecdf",
]
