"""Numerical laboratory for the Ornstein-Uhlenbeck semigroup on L^2(R^N).

du/dt = Lap u + Bx . grad u is evaluated exactly through its Kolmogorov
representation on a periodized box, and used to check logarithmic
convexity, observability from thick sets and logarithmic stability of
reconstructed initial data.
"""
from ._backend import BACKEND
from .errors import (
    ConvergenceError,
    DegenerateCaseError,
    DomainTruncationError,
    InvalidInputError,
    OULabError,
    OutOfRegimeError,
    SolverFailureError,
)
from .field import GridSpec, GridState, SpectralState
from .geometry import ThickSet
from .linops import ConvexityConstants, CovarianceMatrix, DriftMatrix

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "ConvergenceError", "ConvexityConstants", "CovarianceMatrix", "DegenerateCaseError",
    "DomainTruncationError", "DriftMatrix", "GridSpec", "GridState", "InvalidInputError",
    "OULabError", "OutOfRegimeError", "SolverFailureError", "SpectralState", "ThickSet",
]
