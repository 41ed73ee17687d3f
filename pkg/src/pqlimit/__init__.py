"""Least-energy solutions of (p,q)-Laplacian problems and their limits in r and p."""

__version__ = "0.1.0"

from .config import SolverConfig
from .errors import (
    ConfigError,
    ConvergenceError,
    GeometryError,
    PqlimitError,
    ProjectionInfeasible,
    ZeroFieldError,
)
from .fields import ScalarField
from .functionals import SUP, ProblemParams
from .geometry import Domain, Shape, build_domain, lambda_inf_cap, parse_shape, rho_maximizers

__all__ = [
    "__version__",
    "SolverConfig",
    "ConfigError",
    "ConvergenceError",
    "GeometryError",
    "PqlimitError",
    "ProjectionInfeasible",
    "ZeroFieldError",
    "ScalarField",
    "SUP",
    "ProblemParams",
    "Domain",
    "Shape",
    "build_domain",
    "lambda_inf_cap",
    "parse_shape",
    "rho_maximizers",
]
