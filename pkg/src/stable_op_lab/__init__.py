"""Numerics for symmetric stable operators.

Operators are built from a spectral measure on the sphere; the package
evaluates their symbols and heat kernels, applies them pointwise with error
bounds, solves Dirichlet problems on grids, measures Hölder regularity of the
solutions and runs scripted checks of barrier and Liouville-type identities.
"""

from .errors import (
    ConfigError,
    DegenerateMeasure,
    DomainError,
    InvalidOrder,
    QuadratureBudgetExceeded,
    ResolutionError,
    SingularSystem,
    StableOpError,
)
from .grid import GridFunction, GridSpec
from .measure import SpectralMeasure, StableOperator, canonical, normalization_constant
from .nonlocal_apply import EvaluableField, QuadratureBudget, apply_grid, apply_pointwise

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DegenerateMeasure",
    "DomainError",
    "EvaluableField",
    "GridFunction",
    "GridSpec",
    "InvalidOrder",
    "QuadratureBudget",
    "QuadratureBudgetExceeded",
    "ResolutionError",
    "SingularSystem",
    "SpectralMeasure",
    "StableOpError",
    "StableOperator",
    "apply_grid",
    "apply_pointwise",
    "canonical",
    "normalization_constant",
]
