"""Gaussian continuous-variable states under continuous homodyne probing."""

from .errors import (ConfigError, CoverageError, DegenerateMeasurement, DivergenceError,
                     GaussianError, InvalidArgument, LinearizationBreakdown, NumericalFailure)
from .gstate import GaussianState, Mode, ModeKind, ModeLayout, new_vacuum
from .scenarios import PhysicalParams, ScenarioConfig, TrajectoryResult, derive_couplings

__all__ = [
    "ConfigError", "CoverageError", "DegenerateMeasurement", "DivergenceError", "GaussianError",
    "InvalidArgument", "LinearizationBreakdown", "NumericalFailure", "GaussianState", "Mode",
    "ModeKind", "ModeLayout", "new_vacuum", "PhysicalParams", "ScenarioConfig",
    "TrajectoryResult", "derive_couplings",
]
