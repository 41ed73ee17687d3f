"""Exception hierarchy shared by all modules."""


class PqlimitError(Exception):
    """Base class for every error raised by the package."""


class GeometryError(PqlimitError, ValueError):
    """Degenerate shape or a grid too coarse to resolve it."""


class ZeroFieldError(PqlimitError, ValueError):
    """Operation needs a field that is not identically zero."""


class ProjectionInfeasible(PqlimitError):
    """The Nehari scaling does not exist for the given direction."""


class ConvergenceError(PqlimitError):
    """An iterative method hit its iteration cap."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class ConfigError(PqlimitError, ValueError):
    """Invalid user configuration."""
