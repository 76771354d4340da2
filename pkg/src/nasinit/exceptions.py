"""Exception hierarchy shared by all nasinit modules."""


class NasInitError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(NasInitError, ValueError):
    """An argument is outside the range an operation accepts."""


class StructuralError(NasInitError, ValueError):
    """A cell is malformed (non-square matrix, ops length mismatch, ...)."""


class InvalidArchitectureError(NasInitError, ValueError):
    """A well-formed cell violates the search-space constraints."""


class ConstraintError(InvalidArchitectureError):
    """A cell does not fit the fixed frame required by an encoding."""


class SamplingError(NasInitError, RuntimeError):
    """Rejection sampling ran out of attempts."""


class MutationError(NasInitError, RuntimeError):
    """No admissible mutation exists for the given cell."""


class UndefinedMetricError(NasInitError, ValueError):
    """A cluster-validity index is undefined for the given labeling."""


class EmptyResultError(NasInitError, ValueError):
    """A fitted model holds no clusters to extract."""


class DatasetError(NasInitError, ValueError):
    """A benchmark file could not be parsed or validated.

    ``line`` is the 1-based line number of the offending record, when known.
    """

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class MissingArchitectureError(NasInitError, KeyError):
    """A closed-world benchmark has no record for the queried cell."""

    def __str__(self):
        return str(self.args[0]) if self.args else "architecture not in benchmark"


class SearchAbortedError(NasInitError, RuntimeError):
    """A search run could not continue (e.g. mutation resample budget spent)."""
