"""Semantic exception hierarchy.

Every raisable condition in the library is a subclass of ConformalGapError,
so callers (CLI, harness) can separate our diagnostics from genuine bugs.
"""


class ConformalGapError(Exception):
    """Base class for all library errors."""


class DomainError(ConformalGapError):
    """Input outside the contracted domain (e.g. x not in [0,1])."""


class NotContracting(ConformalGapError):
    """IFS fails the uniform contraction estimate at the requested depth."""


class NotFound(ConformalGapError):
    """Search exhausted its depth budget without a witness."""


class SeparationFailed(ConformalGapError):
    """A required image-interval disjointness does not hold."""


class UniFailed(ConformalGapError):
    """A candidate branch pair has no positive nonlinearity margin."""


class TooFewWords(ConformalGapError):
    """The partition's index arithmetic cannot be satisfied at this block length."""


class BudgetExceeded(ConformalGapError):
    """A tree expansion or enumeration exceeded its configured node limit."""


class DegenerateCover(ConformalGapError):
    """The cover scale is too coarse for the restricted Cantor set."""


class ZeroB(ConformalGapError):
    """The oscillation-adapted norm needs b != 0."""


class Overflow(ConformalGapError):
    """Iterated norms exceeded the overflow guard (|r| too large)."""


class UnknownGroup(ConformalGapError):
    """Group index or group word not present in the partition."""


class TooShort(ConformalGapError):
    """Word too short for the requested block statistics."""


class InvalidIndex(ConformalGapError):
    """Damping index outside the admissible index set."""


class PreconditionViolated(ConformalGapError):
    """A documented operation precondition fails (e.g. cone domination)."""


class DensityFailed(ConformalGapError):
    """The selected damping set is not dense; parameters outside the working regime."""


class ScaleBelowResolution(ConformalGapError):
    """Ball-mass query at a scale the atomic approximation cannot resolve."""


class ResolutionTooCoarse(ConformalGapError):
    """Fourier quadrature guard: |xi| * resolution too large."""


class GridTooCoarse(ConformalGapError):
    """Operator-norm grid failed its doubling convergence certificate."""


class HypothesisViolated(ConformalGapError):
    """Analytic-bound hypothesis (e.g. 2*alpha <= delta2+) fails."""


class ParseError(ConformalGapError):
    """Configuration document is not well formed."""


class ValidationError(ConformalGapError):
    """Configuration value or key rejected."""

    def __init__(self, key, message=""):
        self.key = key
        super().__init__(f"{key}: {message}" if message else str(key))


class IoError(ConformalGapError):
    """Report emission failed."""
