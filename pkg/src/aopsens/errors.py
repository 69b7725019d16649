"""Exception hierarchy shared by every module of the package."""


class AopsensError(Exception):
    """Base class for library errors."""


class DomainError(AopsensError, ValueError):
    """A pair (w, v) lies outside the domain of the upper subtraction, or a
    cost lies outside the domain of the operation."""


class BracketError(AopsensError, ArithmeticError):
    """A bisection could not bracket its target."""


class NotStrictError(AopsensError):
    """A strict A-operation is required (tolerances, tolerance functions)."""


class ValidationError(AopsensError, ValueError):
    """A problem instance violates the trajectory axioms or cost domain."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class InstanceError(AopsensError, ValueError):
    """A graph cannot be turned into a valid problem instance."""


class ConsistencyError(AopsensError, AssertionError):
    """A closed-form identity failed to hold numerically."""


class PreconditionError(AopsensError, ValueError):
    """An analysis was requested for an element or trajectory that does not
    satisfy its preconditions (e.g. membership in the optimal trajectory)."""
