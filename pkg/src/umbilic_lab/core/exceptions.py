from typing import Any, Optional


class UmbilicLabError(ValueError):
    """Base class for every error raised by the lab, with an optional payload."""

    def __init__(self, message: str, details: Optional[Any] = None):
        super().__init__(message)
        self.details = details


# surface kernel
class DiscriminantNegative(UmbilicLabError):
    """H^2 - K is negative beyond tolerance, so (H, K) are inconsistent."""


class StencilOutsideDomain(UmbilicLabError):
    """A finite-difference stencil leaves the evaluator's domain."""


class AxisSingularity(UmbilicLabError):
    """A profile sample lies on or across the rotation axis."""


# diagnostics
class OutOfRange(UmbilicLabError):
    """A parameter lies outside its admissible range."""


class OutsideWedge(UmbilicLabError):
    """A curvature pair violates the wedge sandwich."""


class EmptyWindow(UmbilicLabError):
    """No diagram point falls inside the analysis window."""


# umbilic index
class FieldVanishesOnLoop(UmbilicLabError):
    """The planar field is too small somewhere on the loop."""


class UnderSampled(UmbilicLabError):
    """Angle increments stay above the guard after all retries."""


# constructions
class DenominatorVanishes(UmbilicLabError):
    """The traceless Hessian part vanishes on the unit circle."""


class NoBracket(UmbilicLabError):
    """The amplitude residual never changes sign."""


class PostconditionViolated(UmbilicLabError):
    """An integrated profile misses one of its geometric postconditions."""


class EmbeddednessViolated(UmbilicLabError):
    """A tube sample has 1 - r k cos(phi) <= 0."""


class DomainTooLarge(UmbilicLabError):
    """The requested graph domain leaves the region where the graph exists."""


class AxesNotDistinct(UmbilicLabError):
    """Ellipsoid semi-axes are not strictly ordered."""


# elliptic lab
class DegenerateTrace(UmbilicLabError):
    """a11 + a22 is not positive."""


class EllipticityViolated(UmbilicLabError):
    """A coefficient matrix is not positive definite or leaves [l1, l2]."""


class NotACriticalPoint(UmbilicLabError):
    """The gradient does not vanish at the requested center."""


# cli / io
class SchemaMismatch(UmbilicLabError):
    """Two reports cannot be compared."""


class ScenarioConfigError(UmbilicLabError):
    """A scenario file cannot be read or validated."""
