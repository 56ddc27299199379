"""Quantum expander codes, small-set-flip decoding and alpha-percolation tools."""

from qexpander.errors import (
    BudgetExceeded,
    DimensionMismatch,
    DomainError,
    InfeasibleKnobs,
    InvariantViolation,
    NegativeBeta,
    PreconditionViolated,
    QExpanderError,
    ReplayMismatch,
    SizeOverflow,
    Unsatisfiable,
    UnreachableSyndrome,
)

__version__ = "0.1.0"

__all__ = [
    "BudgetExceeded",
    "DimensionMismatch",
    "DomainError",
    "InfeasibleKnobs",
    "InvariantViolation",
    "NegativeBeta",
    "PreconditionViolated",
    "QExpanderError",
    "ReplayMismatch",
    "SizeOverflow",
    "Unsatisfiable",
    "UnreachableSyndrome",
]
