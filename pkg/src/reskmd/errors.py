"""Exception types shared across the toolkit.

Everything user-facing derives from ValueError or RuntimeError so callers
can stay coarse-grained; the concrete classes exist for the CLI's error
categorization and for tests.
"""


class InsufficientDataError(ValueError):
    """Too few samples for the requested operation."""


class TimeOrderingError(ValueError):
    """Timestamps are not strictly increasing."""


class NonUniformSamplingError(ValueError):
    """Operation requires uniformly spaced timestamps; resample first."""


class CsvParseError(ValueError):
    """A CSV row failed to parse; carries the 1-based file line number."""

    def __init__(self, line, message):
        super().__init__(f"line {line}: {message}")
        self.line = line


class DegenerateWindowError(ValueError):
    """Window carries no usable variation (constant data, zero variance)."""


class DegenerateEigenfunctionError(ValueError):
    """Candidate eigenfunction has zero norm under the data measure."""


class NumericalInconsistencyError(RuntimeError):
    """A quantity that must be nonnegative came out significantly negative."""


class RankError(ValueError):
    """Requested truncation rank exceeds what the data supports."""


class DivergenceError(RuntimeError):
    """Trajectory blew up; carries the time of escape."""

    def __init__(self, time, message=None):
        super().__init__(message or f"trajectory diverged at t={time:g}")
        self.time = time


class ConfigurationError(ValueError):
    """Invalid or inconsistent experiment configuration."""
