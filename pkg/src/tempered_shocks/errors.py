"""
Exception hierarchy for tempered-shocks.

Every failure raised on purpose by the package derives from ``ShockModelError`` and
also from the builtin exception a caller would expect (``ValueError`` for bad
parameters, ``NotImplementedError`` for unavailable routes, ``ArithmeticError`` for
numerical breakdown), so generic handlers keep working.
"""


class ShockModelError(Exception):
    """Base class for all tempered-shocks errors."""


class ParameterError(ShockModelError, ValueError):
    """A parameter is outside its admitted range."""


class DomainError(ParameterError):
    """An argument lies outside the mathematical domain of the function."""


class UnsupportedError(ShockModelError, NotImplementedError):
    """The requested variant or evaluation route is not available."""


class SeriesConvergenceError(ShockModelError, ArithmeticError):
    """A series did not meet its stopping rule.

    Attributes:
        partial: Partial value (or ``SeriesResult``) reached before giving up
        terms_used: Number of terms summed
    """

    def __init__(self, message, partial=None, terms_used=0):
        super().__init__(message)
        self.partial = partial
        self.terms_used = terms_used


class TruncationError(SeriesConvergenceError):
    """A tail rule hit its hard cap before the remaining mass became negligible.

    Attributes:
        remaining_mass: Probability mass (or series weight) left beyond the cap
        index: Last index reached
    """

    def __init__(self, message, remaining_mass=float("nan"), index=0, partial=None):
        super().__init__(message, partial=partial, terms_used=index)
        self.remaining_mass = remaining_mass
        self.index = index


class QuadratureError(ShockModelError, ArithmeticError):
    """Adaptive quadrature reported that it could not reach the tolerance.

    Attributes:
        estimate: Integral estimate returned by the integrator
        abserr: Absolute error estimate returned by the integrator
    """

    def __init__(self, message, estimate=float("nan"), abserr=float("nan")):
        super().__init__(message)
        self.estimate = estimate
        self.abserr = abserr
