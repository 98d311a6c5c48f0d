"""Exception types shared across the package."""


class ConfigurationError(Exception):
    """Invalid grid / operator / run configuration."""


class ConvergenceError(RuntimeError):
    """An iterative solver failed to converge."""

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = history


class InstabilityError(RuntimeError):
    """Time stepping produced non-finite values."""

    def __init__(self, message, last_field=None, last_time=None):
        super().__init__(message)
        self.last_field = last_field
        self.last_time = last_time


class EstimationError(RuntimeError):
    """A fit or estimate could not be performed on the given data."""


class OracleError(RuntimeError):
    """An independent verification oracle failed internally."""
