"""Tolerance-based sensitivity analysis for discrete optimization problems whose
objective is a fold of element costs under a generalized addition or
multiplication (an A-operation)."""

__version__ = "0.1.0"

from .algebra import AOperation, Kind, PhiFunction, builtin, fold, from_spec, generate
from .errors import (
    AopsensError, BracketError, ConsistencyError, DomainError, InstanceError,
    NotStrictError, PreconditionError, ValidationError,
)
from .problem import OptimalSet, Problem, restricted_optima, solve, validate
from .subtraction import losub, lower_sub, upper_sub, upsub

__all__ = [
    "AOperation", "Kind", "PhiFunction", "builtin", "fold", "from_spec", "generate",
    "AopsensError", "BracketError", "ConsistencyError", "DomainError", "InstanceError",
    "NotStrictError", "PreconditionError", "ValidationError",
    "OptimalSet", "Problem", "restricted_optima", "solve", "validate",
    "losub", "lower_sub", "upper_sub", "upsub",
]
