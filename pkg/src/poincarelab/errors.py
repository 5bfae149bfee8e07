"""Exception types shared across the package."""


class PoincareLabError(Exception):
    """Base class for all domain errors raised by this package."""


class NonConvergence(PoincareLabError):
    """Iterative solver failed to reach its residual target."""


class DomainError(PoincareLabError):
    """Input outside the mathematical domain of an operation."""


class CriticalValueOnOrbit(PoincareLabError):
    """A preimage branch runs through a critical point, making the
    requested partition sum infinite."""


class NoSignChange(PoincareLabError):
    """Pressure does not change sign on the bisection interval."""


class NotRepelling(PoincareLabError):
    """Fixed point multiplier has modulus <= 1."""


class ResonanceBlowup(PoincareLabError):
    """A coefficient denominator rho^n - rho is numerically zero."""


class NoUnivalentDisc(PoincareLabError):
    """Univalence search exhausted its radius grid."""


class TargetInsideCore(PoincareLabError):
    """Level-set target lies in the image of the central univalence disc."""


class TruncationTooSmall(PoincareLabError):
    """Series truncation order cannot resolve the requested quantity."""


class ChainBreak(PoincareLabError):
    """Annulus chain became degenerate at some step."""

    def __init__(self, k, message=""):
        self.k = k
        super().__init__(message or f"annulus chain degenerate at step {k}")


class NoBranches(PoincareLabError):
    """No inverse branch returns into the target disc."""


class WordBlowup(PoincareLabError):
    """Word enumeration would exceed the configured budget."""


class Infeasible(PoincareLabError):
    """No admissible occupation vector exists for the requested word length."""


class PreconditionUnverifiable(PoincareLabError):
    """A numerical precondition estimate did not converge."""


class UsageError(PoincareLabError):
    """Bad configuration or command-line input."""
