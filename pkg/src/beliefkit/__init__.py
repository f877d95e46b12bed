"""Belief-function and weight-of-evidence toolkit for frequency-based
multi-outcome diagnosis."""

__version__ = "0.1.0"

from .core import (
    BeliefInterval,
    CombinationReport,
    Frame,
    FrameMismatchError,
    MassFunction,
    OutcomeSet,
    TotalConflictError,
    belief,
    belief_interval,
    combine,
    combine_all,
    plausibility,
)

__all__ = [
    "BeliefInterval",
    "CombinationReport",
    "Frame",
    "FrameMismatchError",
    "MassFunction",
    "OutcomeSet",
    "TotalConflictError",
    "belief",
    "belief_interval",
    "combine",
    "combine_all",
    "plausibility",
    "__version__",
]
