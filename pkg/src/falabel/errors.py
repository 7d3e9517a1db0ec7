"""Exception hierarchy shared across the package.

Two failure classes matter to callers: bad inputs (rejected before any
numerical work) and numerical breakdown during fitting or inference.  The
command-line layer maps them to exit codes 2 and 3 respectively.
"""


class FalabelError(Exception):
    """Base class for all package errors."""


class ValidationError(FalabelError, ValueError):
    """Invalid input data, configuration, or serialized file."""


class NumericalError(FalabelError, RuntimeError):
    """Numerical failure: non-finite values, indefinite covariance, etc."""
