"""Exception hierarchy shared by all modules."""


class SmoothBackfitError(Exception):
    """Base class; ``kind`` is the machine-readable error code."""

    kind = "error"


class InvalidArgumentError(SmoothBackfitError, ValueError):
    kind = "invalid-argument"


class DataError(SmoothBackfitError, ValueError):
    kind = "data-error"

    def __init__(self, message, row=None):
        super().__init__(message)
        self.row = row


class IdentifiabilityError(SmoothBackfitError):
    """The data do not identify the additive components (zero kernel mass)."""

    kind = "identifiability-error"

    def __init__(self, message, axis=None, points=None):
        super().__init__(message)
        self.axis = axis
        self.points = points


class ConvergenceError(SmoothBackfitError):
    kind = "convergence-error"

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics


class NumericalError(SmoothBackfitError, ArithmeticError):
    kind = "numerical-error"


class HarnessError(SmoothBackfitError):
    kind = "harness-error"
