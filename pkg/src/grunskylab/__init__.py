"""Numerical toolkit for Grunsky norms, root transforms and quasiconformal extensions."""
from .errors import (
    ConvergenceError,
    DomainError,
    GrunskyLabError,
    HypothesisViolation,
    IntegrationError,
    NoRootError,
    NormalizationError,
    NotConformalThere,
    NotQuasiconformal,
    SingularityError,
    SymmetryError,
    TruncationError,
    UnboundedNormError,
)
from .grunsky import GrunskyMatrix, grunsky_matrix, grunsky_norm
from .series import MapClass, TaylorMap

__version__ = "0.1.0"

__all__ = [
    "ConvergenceError",
    "DomainError",
    "GrunskyLabError",
    "GrunskyMatrix",
    "HypothesisViolation",
    "IntegrationError",
    "MapClass",
    "NoRootError",
    "NormalizationError",
    "NotConformalThere",
    "NotQuasiconformal",
    "SingularityError",
    "SymmetryError",
    "TaylorMap",
    "TruncationError",
    "UnboundedNormError",
    "grunsky_matrix",
    "grunsky_norm",
]
