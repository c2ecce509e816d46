"""Exception taxonomy shared across the package."""

__all__ = ["FlowstackError", "ConfigError", "LearnerError", "ConvergenceError", "SolverError"]


class FlowstackError(Exception):
    """Base class for all package-specific failures."""


class ConfigError(FlowstackError):
    """Invalid experiment or learner configuration."""


class LearnerError(FlowstackError):
    """A learner could not be fitted or applied to the given data."""


class ConvergenceError(LearnerError):
    """An iterative fit ran out of iterations; carries the last iterate."""

    def __init__(self, message, last_iterate=None, iterations=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.iterations = iterations


class SolverError(FlowstackError):
    """The constrained weight solver failed its optimality guarantee."""
