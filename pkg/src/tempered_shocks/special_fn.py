"""
Special functions used by the process and shock-model modules.

This module contains:
- Compensated running summation
- The generalized Wright function 1psi1 with a cancellation-safe stopping rule
- The generalized exponential integral E_l(z)
- Falling factorials and real-order binomial coefficients
"""

import logging
import math
from dataclasses import dataclass

import mpmath
import numpy as np
from scipy import integrate, special

from . import config
from .errors import DomainError, ParameterError, SeriesConvergenceError

logger = logging.getLogger(__name__)

# Terms are generated in blocks and then scanned one by one for the stopping rule
_TERM_BLOCK = 64
_INTEGER_SNAP = 1e-12


class CompensatedSum:
    """Running sum with a second word holding the rounding error (like math.fsum, but incremental)."""

    def __init__(self, value=0.0):
        self._s = float(value)
        self._t = 0.0
        self._abs = abs(self._s)

    @staticmethod
    def two_sum(u, v):
        """Error-free transformation: return (s, t) with s = fl(u + v) and u + v = s + t exactly."""
        s = u + v
        up = s - v
        vpp = s - up
        up -= u
        vpp -= v
        return s, -(up + vpp)

    def add(self, y):
        """Add one term to the sum."""
        y = float(y)
        self._abs += abs(y)
        y, u = CompensatedSum.two_sum(y, self._t)
        self._s, self._t = CompensatedSum.two_sum(y, self._s)
        if self._s == 0:
            self._s = u
        else:
            self._t += u

    @property
    def value(self):
        """Current rounded sum."""
        return self._s + self._t

    @property
    def absolute_total(self):
        """Sum of absolute values of everything added so far."""
        return self._abs


@dataclass(frozen=True)
class WrightSeriesSpec:
    """Argument and parameters of a generalized Wright function pPsi_q.

    Attributes:
        z: Real argument
        upper: Pairs (alpha_i, beta_i) in the numerator gammas Gamma(alpha_i + beta_i k)
        lower: Pairs (a_j, b_j) in the denominator gammas Gamma(a_j + b_j k)
        relative_tolerance: Relative tolerance of the stopping rule
        max_terms: Hard cap on the number of summed terms
    """

    z: float
    upper: tuple
    lower: tuple
    relative_tolerance: float = config.RELATIVE_TOLERANCE
    max_terms: int = config.MAX_TERMS

    def __post_init__(self):
        object.__setattr__(self, "upper", tuple((float(a), float(b)) for a, b in self.upper))
        object.__setattr__(self, "lower", tuple((float(a), float(b)) for a, b in self.lower))
        if not self.relative_tolerance > 0:
            raise ParameterError(f"relative_tolerance must be > 0, got {self.relative_tolerance}")
        if int(self.max_terms) != self.max_terms or self.max_terms < 1:
            raise ParameterError(f"max_terms must be a positive integer, got {self.max_terms}")
        excess = sum(b for _, b in self.lower) - sum(b for _, b in self.upper)
        if not excess > -1:
            raise ParameterError(
                f"Wright series diverges: sum(b_j) - sum(beta_i) = {excess:g} must exceed -1"
            )

    @classmethod
    def psi11(cls, z, upper, lower, **kwargs):
        """Build the single-pair spec for 1psi1[z; upper; lower]."""
        return cls(z=z, upper=(upper,), lower=(lower,), **kwargs)


@dataclass(frozen=True)
class SeriesResult:
    """Outcome of a truncated series evaluation.

    Attributes:
        value: Truncated sum
        terms_used: Number of terms summed
        converged: Whether the stopping rule was met
        estimated_absolute_error: Largest term magnitude in the final run of small terms
        absolute_sum: Sum of term magnitudes (its ratio to |value| measures cancellation)
    """

    value: float
    terms_used: int
    converged: bool
    estimated_absolute_error: float
    absolute_sum: float = 0.0


def _is_nonpositive_integer(x):
    """Mask of entries that sit (to rounding) on 0, -1, -2, ..."""
    nearest = np.rint(x)
    return (nearest <= 0) & (np.abs(x - nearest) <= _INTEGER_SNAP * np.maximum(1.0, np.abs(x)))


def _wright_terms(k, z, alpha1, beta1, a1, b1, log_scale):
    """Vectorized terms exp(log_scale) z^k/k! Gamma(alpha1+beta1 k)/Gamma(a1+b1 k) for an integer array k."""
    upper_arg = alpha1 + beta1 * k
    if np.any(_is_nonpositive_integer(upper_arg)):
        raise ParameterError(f"numerator gamma Gamma({alpha1:g} + {beta1:g} k) hits a pole")
    lower_arg = a1 + b1 * k
    zero = _is_nonpositive_integer(lower_arg)
    safe_lower = np.where(zero, 1.0, lower_arg)

    log_mag = special.gammaln(upper_arg) - special.gammaln(safe_lower) - special.gammaln(k + 1.0)
    log_mag = log_mag + k * math.log(abs(z)) + log_scale
    sign = special.gammasgn(upper_arg) * special.gammasgn(safe_lower)
    if z < 0:
        sign = np.where(k % 2 == 1, -sign, sign)
    with np.errstate(over="ignore"):
        terms = sign * np.exp(log_mag)
    return np.where(zero, 0.0, terms)


def _gamma_ratio(numerator, denominator):
    """Gamma(numerator)/Gamma(denominator) with the reciprocal-gamma convention."""
    if _is_nonpositive_integer(np.asarray(denominator)):
        return 0.0
    sign = special.gammasgn(numerator) * special.gammasgn(denominator)
    return float(sign * math.exp(special.gammaln(numerator) - special.gammaln(denominator)))


def wright_1psi1(spec, extended_precision=False, log_scale=0.0):
    """Evaluate the generalized Wright function 1psi1[z; (alpha1, beta1); (a1, b1)].

    The series sum_k z^k/k! Gamma(alpha1 + beta1 k)/Gamma(a1 + b1 k) is summed with a
    compensated accumulator. Terms whose denominator argument is 0, -1, -2, ... are
    exactly zero. Summation stops once 10 consecutive terms in the tail regime
    (a1 + b1 k > 0 and k beyond 2|z| + 1) are each below tolerance * max(|sum|, 1).

    Args:
        spec: WrightSeriesSpec with exactly one upper and one lower pair
        extended_precision: Sum in mpmath at ``config.EXTENDED_PRECISION_DIGITS`` digits
        log_scale: Return exp(log_scale) * 1psi1, with the factor folded into every term so that
            huge intermediate gamma ratios stay finite

    Returns:
        SeriesResult

    Raises:
        SeriesConvergenceError: If the stopping rule is not met within ``spec.max_terms``
    """
    if len(spec.upper) != 1 or len(spec.lower) != 1:
        raise ParameterError("wright_1psi1 needs exactly one upper and one lower parameter pair")
    (alpha1, beta1), (a1, b1) = spec.upper[0], spec.lower[0]

    if extended_precision:
        return _wright_1psi1_extended(spec, alpha1, beta1, a1, b1, log_scale)

    z = float(spec.z)
    if z == 0.0:
        value = _gamma_ratio(alpha1, a1) * math.exp(log_scale)
        return SeriesResult(value, 1, True, 0.0, abs(value))

    tol = spec.relative_tolerance
    tail_start = 2.0 * abs(z) + 1.0
    acc = CompensatedSum()
    streak = 0
    streak_max = 0.0

    for start in range(0, spec.max_terms, _TERM_BLOCK):
        k = np.arange(start, min(start + _TERM_BLOCK, spec.max_terms), dtype=float)
        terms = _wright_terms(k, z, alpha1, beta1, a1, b1, log_scale)
        if not np.all(np.isfinite(terms)):
            partial = SeriesResult(acc.value, start, False, math.inf, acc.absolute_total)
            raise SeriesConvergenceError(
                f"1psi1 term overflow at k={start} (z={z:g})", partial=partial, terms_used=start
            )
        for offset, term in enumerate(terms.tolist()):
            index = start + offset
            acc.add(term)
            in_tail = a1 + b1 * index > 0 and index > tail_start
            if in_tail and abs(term) < tol * max(abs(acc.value), 1.0):
                streak += 1
                streak_max = max(streak_max, abs(term))
                if streak >= config.SMALL_TERM_STREAK and streak_max <= tol * max(abs(acc.value), 1.0):
                    return SeriesResult(acc.value, index + 1, True, streak_max, acc.absolute_total)
            else:
                streak = 0
                streak_max = 0.0

    partial = SeriesResult(acc.value, spec.max_terms, False, math.inf, acc.absolute_total)
    raise SeriesConvergenceError(
        f"1psi1 did not converge within {spec.max_terms} terms (z={z:g})",
        partial=partial,
        terms_used=spec.max_terms,
    )


def _wright_1psi1_extended(spec, alpha1, beta1, a1, b1, log_scale):
    """mpmath version of wright_1psi1; same stopping rule, evaluated at high precision."""
    with mpmath.workdps(config.EXTENDED_PRECISION_DIGITS):
        z = mpmath.mpf(spec.z)
        tol = mpmath.mpf(spec.relative_tolerance)
        tail_start = 2 * abs(spec.z) + 1
        total = mpmath.mpf(0)
        absolute = mpmath.mpf(0)
        streak = 0
        streak_max = mpmath.mpf(0)
        power = mpmath.exp(log_scale)
        for k in range(spec.max_terms):
            if k > 0:
                power *= z / k
            # gammaprod returns 0 at denominator poles
            term = power * mpmath.gammaprod([alpha1 + beta1 * k], [a1 + b1 * k])
            total += term
            absolute += abs(term)
            if spec.z == 0:
                return SeriesResult(float(total), 1, True, 0.0, float(absolute))
            in_tail = a1 + b1 * k > 0 and k > tail_start
            if in_tail and abs(term) < tol * max(abs(total), 1):
                streak += 1
                streak_max = max(streak_max, abs(term))
                if streak >= config.SMALL_TERM_STREAK:
                    return SeriesResult(float(total), k + 1, True, float(streak_max), float(absolute))
            else:
                streak = 0
                streak_max = mpmath.mpf(0)
        partial = SeriesResult(float(total), spec.max_terms, False, math.inf, float(absolute))
    raise SeriesConvergenceError(
        f"1psi1 (extended precision) did not converge within {spec.max_terms} terms",
        partial=partial,
        terms_used=spec.max_terms,
    )


def gen_exp_integral(order, z):
    """Generalized exponential integral E_l(z) = integral_1^inf exp(-u z) u^(-l) du.

    Uses E_l(z) = z^(l-1) Gamma(1-l, z) when 1 - l > 0, scipy's ``expn`` for integer
    l >= 1, and adaptive quadrature otherwise.

    Args:
        order: Real order l
        z: Positive real argument

    Returns:
        float
    """
    if not z > 0:
        raise DomainError(f"gen_exp_integral needs z > 0, got {z}")
    shape = 1.0 - order
    if shape > 0:
        upper = special.gammaincc(shape, z)
        if upper > 0:
            return math.exp((order - 1.0) * math.log(z) + special.gammaln(shape) + math.log(upper))
        logger.debug("gammaincc(%g, %g) underflowed, using quadrature", shape, z)
    elif float(order).is_integer():
        return float(special.expn(int(order), z))
    return gen_exp_integral_quad(order, z)


def gen_exp_integral_quad(order, z):
    """E_l(z) by adaptive quadrature of its defining integral."""
    if not z > 0:
        raise DomainError(f"gen_exp_integral needs z > 0, got {z}")
    value, _ = integrate.quad(
        lambda u: math.exp(-u * z) * u ** (-order),
        1.0,
        math.inf,
        epsabs=1e-15,
        epsrel=1e-13,
        limit=config.QUAD_LIMIT,
    )
    return value


def upper_gamma_difference(shape, lower, upper):
    """Gamma(s, a) - Gamma(s, b) for 0 < a <= b, without cancellation.

    Args:
        shape: s > 0
        lower: a
        upper: b

    Returns:
        float: integral_a^b x^(s-1) e^(-x) dx
    """
    if not shape > 0:
        raise DomainError(f"shape must be > 0, got {shape}")
    if lower > upper:
        return -upper_gamma_difference(shape, upper, lower)
    scale = special.gamma(shape)
    if special.gammaincc(shape, lower) < 0.5:
        return scale * (special.gammaincc(shape, lower) - special.gammaincc(shape, upper))
    return scale * (special.gammainc(shape, upper) - special.gammainc(shape, lower))


def falling_factorial(x, h):
    """Falling factorial x (x-1) ... (x-h+1); the empty product (h = 0) is 1.

    Works for floats and for mpmath numbers alike.
    """
    if int(h) != h or h < 0:
        raise ParameterError(f"falling_factorial order must be a nonnegative integer, got {h}")
    result = x * 0 + 1
    for m in range(int(h)):
        result *= x - m
    return result


def real_binomial(alpha, j):
    """Binomial coefficient binom(alpha, j) = falling_factorial(alpha, j) / j! for real alpha."""
    if int(j) != j or j < 0:
        raise ParameterError(f"real_binomial index must be a nonnegative integer, got {j}")
    result = alpha * 0 + 1.0
    for m in range(int(j)):
        result *= (alpha - m) / (m + 1)
    return result
