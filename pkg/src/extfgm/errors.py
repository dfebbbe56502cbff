"""Exception types raised across the package."""


class ExtFGMError(Exception):
    """Base class for all package errors."""


class DomainError(ExtFGMError, ValueError):
    """An argument lies outside the domain of the function."""


class InvalidParametersError(ExtFGMError, ValueError):
    """A parameter vector violates the sufficient validity constraint."""


class SingularPrefixError(ExtFGMError, ArithmeticError):
    """The conditioning prefix has (numerically) zero density."""


class ConvergenceError(ExtFGMError, ArithmeticError):
    """An iterative solver exhausted its iteration budget."""


class SingularMatrixError(ExtFGMError, ArithmeticError):
    """A covariance block is too ill-conditioned to invert."""


class NonPositiveDensityError(ExtFGMError, ValueError):
    """The copula density is not strictly positive at a data row."""

    def __init__(self, row, value):
        self.row = row
        self.value = value
        super().__init__(f"density is {value!r} <= 0 at data row {row}")
