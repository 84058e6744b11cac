"""Exception types shared across the package."""


class PinnSpectralError(Exception):
    """Base class for all package-specific errors."""


class DomainError(PinnSpectralError, ValueError):
    """Invalid numeric input (non-finite points, bad parameter ranges)."""


class UnsupportedFamilyError(PinnSpectralError, ValueError):
    """Kernel family does not support the requested operation."""


class CapabilityError(PinnSpectralError):
    """Requested derivative order exceeds analytic and finite-difference capability."""


class GridError(PinnSpectralError, ValueError):
    """Grid is unusable: too small for a stencil, non-uniform, or inconsistent."""


class IllConditionedError(PinnSpectralError):
    """Factorization failed even after jitter escalation."""

    def __init__(self, message, condition_estimate=None):
        super().__init__(message)
        self.condition_estimate = condition_estimate


class SingularSystemError(PinnSpectralError):
    """Discretized linear system is singular."""


class QuadratureError(PinnSpectralError):
    """Quadrature refinement failed to converge."""


class AssemblyError(PinnSpectralError):
    """An assembled matrix violates a structural invariant (symmetry, PSD)."""


class ZeroSourceError(PinnSpectralError, ValueError):
    """An operation requiring a nonzero source received zero."""
