"""Exception hierarchy.

Data problems (bad input, too little data, failed fits) derive from
:class:`DataError`; the CLI maps those to exit status 2.
"""


class AuguryError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParameterError(AuguryError, ValueError):
    """A parameter is outside its allowed range."""


class DataError(AuguryError):
    """The input data cannot support the requested analysis."""


class InsufficientDataError(DataError):
    pass


class EmptyInputError(DataError):
    pass


class EmptySelectionError(DataError):
    """A filter (application, time window) matched nothing."""


class SchemaError(DataError):
    """A required column is absent from a tabular source."""

    def __init__(self, column, message=None):
        self.column = column
        super().__init__(message or f"missing required column: {column!r}")


class FormatError(DataError):
    pass


class DegenerateInputError(DataError):
    """A regression design is rank deficient."""


class ConvergenceError(DataError):
    """An iterative fit ran out of budget.

    ``last_iterate`` holds the parameter vector reached when it stopped.
    """

    def __init__(self, message, last_iterate=None, step=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.step = step
