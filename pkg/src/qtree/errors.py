"""Exception types shared by all modules.

The command line maps :class:`ValidationError` to exit code 2 and
:class:`NumericError` (including :class:`CapError`) to exit code 3.
"""


class QTreeError(Exception):
    """Base class for package errors."""


class ValidationError(QTreeError, ValueError):
    """Malformed input: bad graph data, bad window, violated preconditions."""


class NumericError(QTreeError, RuntimeError):
    """A numerical procedure failed to reach its accuracy target."""


class CapError(NumericError):
    """A configured size cap (vertices, cover size, unfold size) was exceeded."""


class IncompleteScanError(NumericError):
    """Eigenvalue scan could not be completed.

    Parameters
    ----------
    message : str
    intervals : list of (float, float)
        Subintervals of the spectral window that could not be resolved.
    """

    def __init__(self, message, intervals=()):
        super().__init__(message)
        self.intervals = list(intervals)
