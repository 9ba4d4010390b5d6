"""Numerical lab for blow-up versus global existence of ``u_t >= div(a grad u) + |u|^(q-1) u``."""
from .coefficients import CoefficientField, check_growth, envelope
from .errors import (ConfigurationError, CoverageError, DomainError, ExtrapolationError,
                     FujitaLabError, ResolutionError, ShapeError, SolverAbort)
from .exact import ExactSolutionParams, admissible_params, critical_exponent
from .grid import GridFunction, RadialGrid
from .solver import InitialData, SolverConfig, dichotomy_sweep, run

__version__ = "0.1.0"
