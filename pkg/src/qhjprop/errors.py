"""Exception types raised by qhjprop.

Every error that can cross the CLI boundary has a stable class name; the CLI
emits ``type(exc).__name__`` in its error documents.
"""


class QhjpropError(Exception):
    """Base class for all qhjprop errors."""


class NonPositiveMass(QhjpropError):
    """The mass-like coefficient a(t) was <= 0 at a queried time."""


class ToleranceNotMet(QhjpropError):
    """An adaptive integrator or quadrature could not reach the requested tolerance."""


class CausticSingularity(QhjpropError):
    """The boundary-value problem is degenerate (conjugate point); the kernel diverges."""


class OverdampedPreset(QhjpropError):
    """Damped-oscillator preset with omega^2 <= gamma^2/4 (no real shifted frequency)."""


class DegenerateSlice(QhjpropError):
    """A time-slice elimination step had a vanishing quadratic coefficient; perturb N."""


class DegenerateGaussian(QhjpropError):
    """A complex Gaussian integral was divergent; signals a bug in the caller's exponent."""


class StencilOutOfDomain(QhjpropError):
    """A finite-difference stencil left the domain where the action field is defined."""


class EdgeLeakage(QhjpropError):
    """Wavefunction amplitude at the grid edges is too large for a reliable evolution."""


class ParseError(QhjpropError):
    """Malformed configuration document."""


class ValidationError(QhjpropError):
    """Well-formed configuration violating a physical or structural constraint."""
