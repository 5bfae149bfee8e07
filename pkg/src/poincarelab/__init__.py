"""Numerical laboratory for Poincare functions of polynomials.

Builds Koenigs linearisers from the Schroeder functional equation, computes
partition functions and topological pressure for polynomial dynamics,
estimates hyperbolic dimension and the vanishing exponent, and checks the
structural identities tying the lineariser's preimage geometry to the base
polynomial.
"""

__version__ = "0.1.0"

from .errors import (
    ChainBreak,
    CriticalValueOnOrbit,
    DomainError,
    Infeasible,
    NoBranches,
    NonConvergence,
    NoSignChange,
    NotRepelling,
    NoUnivalentDisc,
    PoincareLabError,
    PreconditionUnverifiable,
    ResonanceBlowup,
    TargetInsideCore,
    TruncationTooSmall,
    UsageError,
    WordBlowup,
)
from .metrics import Annulus, MetricKind, derivative_norm, metric_density
from .polynomial import Polynomial, solve_many

__all__ = [
    "Annulus",
    "ChainBreak",
    "CriticalValueOnOrbit",
    "DomainError",
    "Infeasible",
    "MetricKind",
    "NoBranches",
    "NonConvergence",
    "NoSignChange",
    "NotRepelling",
    "NoUnivalentDisc",
    "PoincareLabError",
    "Polynomial",
    "PreconditionUnverifiable",
    "ResonanceBlowup",
    "TargetInsideCore",
    "TruncationTooSmall",
    "UsageError",
    "WordBlowup",
    "derivative_norm",
    "metric_density",
    "solve_many",
    "__version__",
]
