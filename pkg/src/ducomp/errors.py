"""Exception types shared across the package."""


class DucompError(Exception):
    """Base class for all package errors."""


class ConfigurationError(DucompError):
    """Invalid or inconsistent configuration (bad file, bad value, mismatched sizes)."""


class TopologyError(ConfigurationError):
    """Topology violates a structural requirement (too few agents, disconnected)."""


class WeightMatrixError(ConfigurationError):
    """Constructed weight matrix fails a mixing-matrix requirement."""


class CostModelError(ConfigurationError):
    """Cost coefficients violate convexity requirements."""


class ParameterError(ConfigurationError):
    """Algorithm or compressor parameter out of its admissible range."""


class ShapeError(DucompError):
    """Array arguments with inconsistent dimensions."""


class DegenerateProblemError(DucompError):
    """Optimality system is singular or numerically rank-deficient."""


class NumericsError(DucompError):
    """Non-finite values fed into a numeric operation."""


class DivergenceError(DucompError):
    """Solver iterates blew up; carries the partial trace collected so far."""

    def __init__(self, message, iteration, trace=None):
        super().__init__(message)
        self.iteration = iteration
        self.trace = trace
