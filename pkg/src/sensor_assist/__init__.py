"""Simulation and closed-form analysis of sensor-assisted bit-flip error correction."""

from .algebra import (
    DomainError,
    ErrorProbabilities,
    OutcomeFractions,
    effective_correct,
    effective_fault,
    outcome_fractions,
    solve_environmental,
)
from .qec import ErrorMask, classify_case, enumerate_truth_table, syndrome_of

__version__ = "0.1.0"
