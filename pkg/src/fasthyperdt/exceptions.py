"""Exception hierarchy shared by the geometry, tree and I/O layers."""


class HyperDTError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(HyperDTError, ValueError):
    """Array shapes or coordinate counts do not agree."""


class DomainError(HyperDTError, ValueError):
    """A numeric argument lies outside the domain of the operation."""


class InvalidPointError(HyperDTError, ValueError):
    """A point violates the invariant of its model (hyperboloid sheet or ball).

    ``row`` is set when the offending point came from a matrix.
    """

    def __init__(self, message, row=None):
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)
        self.row = row


class ApproximatePostprocessingWarning(UserWarning):
    """Threshold postprocessing ran without the exact per-tree training rows."""


class FormatError(HyperDTError, ValueError):
    """A dataset or model file is malformed or does not match expectations."""
