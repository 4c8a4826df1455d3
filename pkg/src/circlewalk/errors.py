"""Exception hierarchy for circlewalk.

All library-specific failures derive from CircleWalkError so callers can
catch one base class.  Numerical-integrity failures (SpectralCorruption,
PrecisionExhausted) are kept distinct because the CLI maps them to a
dedicated exit code.
"""


class CircleWalkError(Exception):
    """Base class for all circlewalk errors."""


class DegenerateDistribution(CircleWalkError):
    """Step distribution has fewer than two distinct atoms after cleanup."""


class InvalidProbability(CircleWalkError):
    """Probability vector has negative entries or does not sum to one."""


class EnvelopeNotFound(CircleWalkError):
    """No certified Gaussian envelope for the characteristic function."""


class Overflow(CircleWalkError):
    """Integer arithmetic exceeded the supported 128-bit range."""


class PrecisionExhausted(CircleWalkError):
    """Fixed-point precision cannot certify the requested quantity."""


class SpanNotCoprime(CircleWalkError):
    """Step-span / modulus share a factor; the walk is not irreducible."""


class SpectralCorruption(CircleWalkError):
    """Spectral state failed an exactness re-synchronisation check."""


class SupportTooLarge(CircleWalkError):
    """Exact convolution support would exceed the hard size limit."""


class CoefficientBound(CircleWalkError):
    """Exponential-sum coefficients violate the |c_h| <= 1/|h| bound."""


class ZeroSeparation(CircleWalkError):
    """Point configuration has coincident points modulo one."""
