"""Exception types shared by every layer of the library."""


class WachsynError(Exception):
    """Base class for all library errors."""


class PrecisionError(WachsynError):
    """Raised when a computation would need more p-adic or mu-adic precision than is available."""


class NotDivisibleError(WachsynError, ArithmeticError):
    """Exact division failed; ``index`` is the first obstructing coefficient."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class NotUnitError(WachsynError, ArithmeticError):
    """The element to invert has a non-unit constant term."""


class NotInvariantError(WachsynError):
    """The series is not fixed by the finite torsion subgroup."""


class MalformedError(WachsynError, ValueError):
    """Input data violates a structural requirement (shape, prime, schema)."""
