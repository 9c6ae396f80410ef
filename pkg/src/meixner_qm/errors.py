"""Exception types shared across the package."""


class DomainError(ValueError):
    """Argument outside the mathematical domain of an operation."""


class SizeError(ValueError):
    """Matrix or array size below the minimum the operation supports."""


class ConstraintError(ValueError):
    """Parameter combination violates a derived constraint."""


class PreconditionError(ValueError):
    """Call violates a documented precondition (index range, grid density...)."""


class SingularityError(ValueError):
    """Evaluation requested exactly at a pole of the function."""


class AccuracyError(RuntimeError):
    """Estimated numerical error of a result exceeds the accepted threshold."""


class GridMismatchError(ValueError):
    """Two sampled quantities do not live on the same grid."""


class UndefinedCountError(RuntimeError):
    """Node counting is undefined (identically vanishing input)."""


class OracleError(RuntimeError):
    """A quadrature oracle cannot handle the requested integrand."""
