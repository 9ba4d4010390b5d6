"""Exception hierarchy shared by all fujita_lab modules."""


class FujitaLabError(Exception):
    """Base class for library errors."""


class DomainError(FujitaLabError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ConfigurationError(FujitaLabError, ValueError):
    """Inconsistent or malformed configuration."""


class ExtrapolationError(FujitaLabError, ValueError):
    """Tabulated data queried outside its sampled range."""


class ShapeError(FujitaLabError, ValueError):
    pass


class ResolutionError(FujitaLabError, RuntimeError):
    """Quadrature refinement changed a result by more than the allowed amount."""


class CoverageError(FujitaLabError, ValueError):
    """A grid function does not cover the domain an operation integrates over."""


class SolverAbort(FujitaLabError, RuntimeError):
    """The time integrator met a non-finite state."""
