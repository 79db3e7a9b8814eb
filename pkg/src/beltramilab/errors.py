"""Exception hierarchy shared across the package.

Configuration-type errors map to CLI exit code 1, numerical failures to 2.
"""


class SimulationError(Exception):
    """Base class for all package errors."""


class ConfigurationError(SimulationError):
    """Invalid grid/operator/experiment description."""


class ResolutionError(ConfigurationError):
    """A scale delta = 2**-j is not representable on the requested grid."""


class ModelError(SimulationError):
    """A dilatation model violates its own invariants (bump bound, ellipticity, ...)."""


class DivergenceError(SimulationError):
    """Neumann iteration produced non-finite values."""

    def __init__(self, message, last_finite_index=None):
        super().__init__(message)
        self.last_finite_index = last_finite_index


class ConvergenceError(SimulationError):
    """Fixed-point iteration hit max_iter before reaching tolerance."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class DegenerateNormalizationError(SimulationError):
    """|F(1) - F(0)| too small for the 3-point normalization."""
