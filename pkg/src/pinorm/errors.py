"""Exception types shared across the package."""


class PinormError(Exception):
    """Base class for all package-specific errors."""


class InvalidState(PinormError):
    """A density matrix (or state file) failed validation."""


class InvalidField(PinormError):
    """An operation was applied to a tensor over the wrong scalar field."""


class ShapeMismatch(PinormError):
    """Operands have incompatible shapes or dimensions."""


class BudgetExceeded(PinormError):
    """An enumeration or separation pass would exceed its configured budget."""

    def __init__(self, message, required=None, budget=None):
        super().__init__(message)
        self.required = required
        self.budget = budget


class UnboundedProblem(PinormError):
    """The feasible set has a direction of unbounded increase.

    With a full covering product per factor this cannot happen, so it
    signals a broken or non-spanning row set.
    """

    def __init__(self, message, ray=None):
        super().__init__(message)
        self.ray = ray


class NumericalError(PinormError):
    """The solver lost numerical consistency and refused to continue."""
