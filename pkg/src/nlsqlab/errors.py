"""Shared exception types."""


class InvalidInputError(ValueError):
    """Arguments violate an operation's contract."""


class DimensionError(InvalidInputError):
    """Matrix or cutoff dimensions are incompatible or too small."""


class TruncationError(InvalidInputError):
    """A grid or cutoff captures too little of the analytic object."""


class DegeneratePoleError(InvalidInputError):
    """Coincident decay rates where distinct ones are required."""


class NumericalError(RuntimeError):
    """An iterative routine failed to converge or produced invalid numbers."""


class AmbiguityError(NumericalError):
    """The data does not single out a result."""
