"""
Exception hierarchy for the convex-integration toolkit.

Every failure that a caller is expected to handle is one of these classes, so
the CLI can map them onto exit codes without inspecting messages.
"""
from typing import Dict, Optional


class ConvexIntegrationError(Exception):
    """Base class for all toolkit errors."""


class InvalidParameterError(ConvexIntegrationError):
    """Raised when an argument is outside its documented range."""


class PreconditionViolation(ConvexIntegrationError):
    """Raised when an input field does not meet an operation's precondition."""


class OutOfDomainError(ConvexIntegrationError):
    """Raised when exponents or matrices fall outside the region an operation is defined on."""


class ConstructionFailure(ConvexIntegrationError):
    """Raised when a bundled construction fails its own startup checks."""


class NoAdmissibleShifts(ConvexIntegrationError):
    """Raised when no shifts make the jet supports pairwise disjoint."""


class InfeasibleB(ConvexIntegrationError):
    """Raised when no positive epsilon satisfies the integrality condition for b."""


class DegenerateInput(ConvexIntegrationError):
    """Raised when an experiment input carries no signal to measure."""


class BlowUpError(ConvexIntegrationError):
    """Raised when a local solve leaves its guarded H^3 envelope."""


class ResolutionError(ConvexIntegrationError):
    """Raised when a grid cannot resolve the finest scale of a construction."""

    def __init__(self, message: str, required: Optional[int] = None):
        super().__init__(message)
        self.required = required


class ToleranceBreach(ConvexIntegrationError):
    """Raised when a verified identity misses its tolerance."""

    def __init__(self, message: str, residuals: Optional[Dict[str, float]] = None):
        super().__init__(message)
        self.residuals = dict(residuals or {})
