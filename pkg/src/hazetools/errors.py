"""Exception types shared across the package."""


class HazetoolsError(Exception):
    """Base class for all package errors."""


class ImageFormatError(HazetoolsError):
    """Raster could not be decoded, or uses an unsupported layout/bit depth."""


class AirlightError(HazetoolsError):
    """Air-light estimation failed (degenerate input)."""


class ConfigError(HazetoolsError):
    """Invalid pipeline configuration value."""


class MessageError(HazetoolsError):
    """Invalid transmission-constraint message (bounds or infeasible target)."""


class SolverError(HazetoolsError):
    """Iterative solver failed to meet its convergence contract.

    Carries the best iterate seen so far plus the residual that was reached,
    so callers can decide whether a degraded result is still usable.
    """

    def __init__(self, message, residual=None, iterations=None, iterate=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations
        self.iterate = iterate
