"""
Competing-risks shock model driven by the BTSFPP.

A system receives shocks of two types; it fails once the accumulated count
Z = N1 + N2 reaches an independent random threshold L. This module contains:
- Threshold distributions for L and mixing laws for geometric mixtures
- Hazard rates of the shock streams, failure (sub-)densities and the reliability of T
- Failure-cause probabilities and the closed-form reliability special cases
- FailureLaw, the tabulated law of (T, cause) under hitting or crossing semantics
"""

import logging
import math
import warnings
from abc import ABCMeta, abstractmethod
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from . import config
from .errors import (
    DomainError,
    ParameterError,
    QuadratureError,
    TruncationError,
    UnsupportedError,
)
from .process import (
    BivariateCount,
    ProcessParams,
    SubordinatedPoisson,
    as_model,
    hoppe_occupation_sum,
    hoppe_sum,
    levy_measure_mass,
    occupation_integrals,
    pmf_time_derivative,
    theta_series,
    total_count_pmf,
    tsfpp_pmf,
)
from .special_fn import WrightSeriesSpec, upper_gamma_difference, wright_1psi1

logger = logging.getLogger(__name__)

SEMANTICS = ("crossing", "hitting")
RELIABILITY_ROUTES = ("series", "wright")
DENSITY_ROUTES = ("hazard", "series")
CAUSE_ROUTES = ("auto", "series", "quadrature", "occupation")

# exp(-x) underflows to subnormals past this exponent
_EXPONENT_LIMIT = 700.0
_TINY = np.finfo(float).tiny


def _quad(integrand, lower, upper, what, points=None):
    """scipy ``quad`` that turns an IntegrationWarning into a QuadratureError."""
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", integrate.IntegrationWarning)
        value, abserr = integrate.quad(
            integrand,
            lower,
            upper,
            epsabs=config.QUAD_EPSABS,
            epsrel=config.QUAD_EPSREL,
            limit=config.QUAD_LIMIT,
            points=points,
        )
    if caught and abserr > 100 * config.QUAD_EPSABS:
        raise QuadratureError(
            f"quadrature for {what} did not converge: {caught[0].message}", estimate=value, abserr=abserr
        )
    return value


# ---------------------------------------------------------------------------
# Mixing laws on (0, 1)
# ---------------------------------------------------------------------------


class MixingLaw(metaclass=ABCMeta):
    """Law G of the success probability p of a geometric threshold."""

    name = "mixing"

    @abstractmethod
    def support(self):
        """Interval (lower, upper) inside (0, 1] carrying the law."""

    @abstractmethod
    def density(self, p):
        """Density dG/dp on the support."""

    @abstractmethod
    def _quantile(self, v):
        """Inverse cdf on an array of levels in (0, 1]."""

    def sample(self, rng, size):
        """Draw ``size`` success probabilities by inversion; every draw lies in (0, 1]."""
        levels = 1.0 - rng.random(size)
        return np.clip(self._quantile(levels), np.finfo(float).tiny, 1.0)

    def expect(self, fn):
        """E[fn(p)] under G by adaptive quadrature."""
        lower, upper = self.support()
        return _quad(lambda p: fn(p) * self.density(p), lower, upper, f"{self.name} mixture")

    def expect_vector(self, fn):
        """E[fn(p)] for a vector-valued fn, by ``quad_vec``."""
        lower, upper = self.support()
        value, abserr = integrate.quad_vec(
            lambda p: fn(p) * self.density(p),
            lower,
            upper,
            epsabs=config.QUAD_EPSABS,
            epsrel=config.QUAD_EPSREL,
            limit=config.QUAD_LIMIT,
        )
        if abserr > 100 * config.QUAD_EPSABS:
            raise QuadratureError(
                f"{self.name} mixture did not converge", estimate=float(np.max(value)), abserr=abserr
            )
        return value

    def to_dict(self):
        """Serializable description."""
        return {"name": self.name, **{key: value for key, value in vars(self).items()}}


@dataclass(frozen=True)
class UniformMixing(MixingLaw):
    """dG(p) = dp on (0, 1)."""

    name = "uniform"

    def support(self):
        """The unit interval."""
        return 0.0, 1.0

    def density(self, p):
        """Constant 1."""
        return 1.0

    def _quantile(self, v):
        return v


@dataclass(frozen=True)
class TruncatedLomax(MixingLaw):
    """Lomax law renormalized to (0, 1): dG = a b (1 + a p)^-(b+1) / (1 - (1 + a)^-b) dp."""

    a: float
    b: float

    name = "lomax"

    def __post_init__(self):
        if not self.a > 0:
            raise ParameterError(f"lomax a must be > 0, got {self.a}")
        if not self.b > -1 or self.b == 0:
            raise ParameterError(f"lomax b must satisfy b > -1 and b != 0, got {self.b}")

    @property
    def _norm(self):
        return -math.expm1(-self.b * math.log1p(self.a))

    def support(self):
        """The unit interval."""
        return 0.0, 1.0

    def density(self, p):
        """Lomax density divided by its mass on (0, 1)."""
        return self.a * self.b * (1.0 + self.a * p) ** (-(self.b + 1.0)) / self._norm

    def _quantile(self, v):
        return ((1.0 - v * self._norm) ** (-1.0 / self.b) - 1.0) / self.a


@dataclass(frozen=True)
class TruncatedWeibull(MixingLaw):
    """Three-parameter Weibull law (scale a, shape b, location c) renormalized to its mass in (0, 1)."""

    a: float
    b: float
    c: float

    name = "weibull"

    def __post_init__(self):
        if not self.a > 0 or not self.b > 0:
            raise ParameterError(f"weibull a and b must be > 0, got {self.a}, {self.b}")
        if not self.c < 1:
            raise ParameterError(f"weibull location c must be < 1 so the law charges (0, 1), got {self.c}")

    def _survival(self, p):
        return np.exp(-(((np.asarray(p) - self.c) / self.a) ** self.b))

    def support(self):
        """(max(0, c), 1)."""
        return max(0.0, self.c), 1.0

    def _mass(self):
        lower, upper = self.support()
        return float(self._survival(lower) - self._survival(upper))

    def density(self, p):
        """(b/a) ((p-c)/a)^(b-1) exp(-((p-c)/a)^b) divided by the mass on the support."""
        x = (p - self.c) / self.a
        return self.b / self.a * x ** (self.b - 1.0) * math.exp(-(x**self.b)) / self._mass()

    def _quantile(self, v):
        lower, _ = self.support()
        level = self._survival(lower) - v * self._mass()
        return self.c + self.a * (-np.log(level)) ** (1.0 / self.b)


@dataclass(frozen=True)
class PointMass(MixingLaw):
    """Degenerate mixing law at a single p."""

    p: float

    name = "point"

    def __post_init__(self):
        if not 0 < self.p <= 1:
            raise ParameterError(f"point mass p must lie in (0, 1], got {self.p}")

    def support(self):
        """The single point."""
        return self.p, self.p

    def density(self, p):
        """A point mass has no density."""
        raise UnsupportedError("a point mass has no density")

    def _quantile(self, v):
        return np.full(np.shape(v), self.p)

    def expect(self, fn):
        """fn(p)."""
        return fn(self.p)

    def expect_vector(self, fn):
        """fn(p)."""
        return np.asarray(fn(self.p))


MIXING_LAWS = {cls.name: cls for cls in (UniformMixing, TruncatedLomax, TruncatedWeibull, PointMass)}


# ---------------------------------------------------------------------------
# Threshold distributions
# ---------------------------------------------------------------------------


class ThresholdDist(metaclass=ABCMeta):
    """Law of the threshold L on {1, 2, ...}: q_k = P(L = k), survival qbar_k = P(L > k)."""

    name = "threshold"

    @abstractmethod
    def survival_array(self, n):
        """qbar_0..qbar_n as an array."""

    @abstractmethod
    def sample(self, rng, size):
        """Draw ``size`` thresholds as an int64 array."""

    def truncation_index(self):
        """Smallest K with qbar_K < 1e-12, or None when the tail is too heavy to bound up front."""
        return None

    def survival(self, k):
        """P(L > k)."""
        if int(k) != k or k < 0:
            raise DomainError(f"k must be a nonnegative integer, got {k}")
        return float(self.survival_array(int(k))[int(k)])

    def pmf_array(self, n):
        """q_0..q_n (q_0 = 0)."""
        survival = self.survival_array(n)
        pmf = np.zeros(n + 1)
        pmf[1:] = np.maximum(survival[:-1] - survival[1:], 0.0)
        return pmf

    def pmf(self, k):
        """P(L = k)."""
        if int(k) != k or k < 0:
            raise DomainError(f"k must be a nonnegative integer, got {k}")
        return float(self.pmf_array(int(k))[int(k)])

    def to_dict(self):
        """Serializable description."""
        return {"name": self.name, **{key: value for key, value in vars(self).items()}}


def _truncation_for_ratio(ratio):
    """Smallest K with ratio^K < THRESHOLD_TRUNCATION."""
    if ratio <= 0:
        return 1
    return max(1, math.ceil(math.log(config.THRESHOLD_TRUNCATION) / math.log(ratio)))


@dataclass(frozen=True)
class Geometric(ThresholdDist):
    """P(L = k) = p (1 - p)^(k - 1), qbar_k = (1 - p)^k."""

    p: float

    name = "geometric"

    def __post_init__(self):
        if not 0 < self.p <= 1:
            raise ParameterError(f"geometric p must lie in (0, 1], got {self.p}")

    def survival_array(self, n):
        """(1 - p)^k."""
        return (1.0 - self.p) ** np.arange(n + 1, dtype=float)

    def pmf_array(self, n):
        """p (1 - p)^(k - 1) for k >= 1."""
        pmf = np.zeros(n + 1)
        pmf[1:] = self.p * (1.0 - self.p) ** np.arange(n, dtype=float)
        return pmf

    def truncation_index(self):
        """Geometric tail bound."""
        return _truncation_for_ratio(1.0 - self.p)

    def sample(self, rng, size):
        """numpy's geometric sampler (support 1, 2, ...)."""
        return rng.geometric(self.p, size).astype(np.int64)


@dataclass(frozen=True)
class DiscreteExponential(ThresholdDist):
    """qbar_k = exp(-k): the geometric law with p = 1 - 1/e."""

    name = "discrete-exponential"

    @property
    def p(self):
        """Equivalent geometric success probability."""
        return -math.expm1(-1.0)

    def survival_array(self, n):
        """exp(-k)."""
        return np.exp(-np.arange(n + 1, dtype=float))

    def truncation_index(self):
        """e^-28 < 1e-12."""
        return _truncation_for_ratio(math.exp(-1.0))

    def sample(self, rng, size):
        """Geometric draws with p = 1 - 1/e."""
        return rng.geometric(self.p, size).astype(np.int64)


@dataclass(frozen=True)
class YuleSimon(ThresholdDist):
    """Yule–Simon law, qbar_k = k B(k, rho + 1), q_k = rho B(k, rho + 1)."""

    rho: float

    name = "yule-simon"

    def __post_init__(self):
        if not self.rho > 0:
            raise ParameterError(f"yule-simon rho must be > 0, got {self.rho}")

    def survival_array(self, n):
        """k B(k, rho + 1), with qbar_0 = 1."""
        k = np.arange(1, n + 1, dtype=float)
        return np.concatenate(([1.0], np.exp(np.log(k) + special.betaln(k, self.rho + 1.0))))

    def pmf_array(self, n):
        """rho B(k, rho + 1) for k >= 1."""
        k = np.arange(1, n + 1, dtype=float)
        return np.concatenate(([0.0], self.rho * np.exp(special.betaln(k, self.rho + 1.0))))

    def sample(self, rng, size):
        """Geometric(exp(-W)) with W ~ Exp(rho)."""
        success = np.exp(-rng.exponential(1.0 / self.rho, size))
        return rng.geometric(np.maximum(success, np.finfo(float).tiny), size).astype(np.int64)


@dataclass(frozen=True)
class DeterministicThreshold(ThresholdDist):
    """L = m with probability one."""

    m: int

    name = "deterministic"

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 1:
            raise ParameterError(f"deterministic threshold m must be an integer >= 1, got {self.m}")
        object.__setattr__(self, "m", int(self.m))

    def survival_array(self, n):
        """1 below m, 0 from m on."""
        return (np.arange(n + 1) < self.m).astype(float)

    def truncation_index(self):
        """m."""
        return self.m

    def sample(self, rng, size):
        """Constant draws."""
        return np.full(size, self.m, dtype=np.int64)


@dataclass(frozen=True)
class Empirical(ThresholdDist):
    """Finite threshold law with P(L = k) = probs[k - 1]."""

    probs: tuple

    name = "empirical"

    def __post_init__(self):
        probs = tuple(float(q) for q in self.probs)
        object.__setattr__(self, "probs", probs)
        if not probs:
            raise ParameterError("an empirical threshold needs at least one probability")
        if any(q < 0 for q in probs):
            raise ParameterError(f"empirical probabilities must be >= 0, got {probs}")
        if abs(math.fsum(probs) - 1.0) > 1e-12:
            total = math.fsum(probs)
            raise ParameterError(f"empirical probabilities must sum to 1 within 1e-12, got {total!r}")

    def survival_array(self, n):
        """Tail sums of the probabilities."""
        probs = np.zeros(max(n, len(self.probs)) + 2)
        probs[1 : len(self.probs) + 1] = self.probs
        tails = np.cumsum(probs[::-1])[::-1]
        survival = tails[1 : n + 2].copy()
        survival[0] = 1.0
        return survival

    def pmf_array(self, n):
        """The given probabilities, zero padded."""
        pmf = np.zeros(n + 1)
        upper = min(n, len(self.probs))
        pmf[1 : upper + 1] = self.probs[:upper]
        return pmf

    def truncation_index(self):
        """Largest support point."""
        return len(self.probs)

    def sample(self, rng, size):
        """Categorical draws on 1..len(probs)."""
        probs = np.asarray(self.probs)
        return rng.choice(np.arange(1, len(probs) + 1), size=size, p=probs / probs.sum()).astype(np.int64)


@dataclass(frozen=True)
class GeometricMixture(ThresholdDist):
    """Geometric threshold whose success probability is drawn from a mixing law."""

    mixing: MixingLaw

    name = "mixture"

    def __post_init__(self):
        if not isinstance(self.mixing, MixingLaw):
            raise ParameterError(f"expected a MixingLaw, got {type(self.mixing).__name__}")

    def survival_array(self, n):
        """E[(1 - p)^k] under the mixing law."""
        k = np.arange(n + 1, dtype=float)
        survival = np.asarray(self.mixing.expect_vector(lambda p: (1.0 - p) ** k), dtype=float)
        survival[0] = 1.0
        return survival

    def truncation_index(self):
        """Finite only when the mixing law stays away from p = 0."""
        lower, _ = self.mixing.support()
        return _truncation_for_ratio(1.0 - lower) if lower > 0 else None

    def sample(self, rng, size):
        """p from the mixing law, then a geometric draw."""
        return rng.geometric(self.mixing.sample(rng, size)).astype(np.int64)

    def to_dict(self):
        """Serializable description."""
        return {"name": self.name, "mixing": self.mixing.to_dict()}


THRESHOLDS = {
    cls.name: cls
    for cls in (
        Geometric,
        DiscreteExponential,
        YuleSimon,
        DeterministicThreshold,
        Empirical,
        GeometricMixture,
    )
}


def threshold_survival(d, k):
    """qbar_k = P(L > k); qbar_0 = 1 for every law."""
    return d.survival(k)


# ---------------------------------------------------------------------------
# Threshold-weighted series
# ---------------------------------------------------------------------------


def _weights(d, n, kind):
    return d.survival_array(n) if kind == "survival" else d.pmf_array(n)


def _heavy_tail_stop(terms):
    """Index closing the first negligible run of HEAVY_TAIL_STREAK terms past the largest term, or None."""
    streak = config.HEAVY_TAIL_STREAK
    if terms.size < streak:
        return None
    magnitudes = np.abs(terms)
    cumulative = np.concatenate(([0.0], np.cumsum(magnitudes)))
    windows = cumulative[streak:] - cumulative[:-streak]
    first = int(np.argmax(magnitudes)) + 1
    hits = np.flatnonzero(windows[first:] < config.THRESHOLD_TRUNCATION * cumulative[-1])
    return first + int(hits[0]) + streak - 1 if hits.size else None


def threshold_series(d, values, kind="survival", cap=config.THRESHOLD_HARD_CAP):
    """sum_k w_k v_k with w = qbar (``kind="survival"``) or q (``kind="pmf"``).

    ``values(n)`` must return v_0..v_n, probabilities or of that size. Light-tailed laws
    start at their truncation index K (qbar_K < 1e-12) and double n until qbar_n, which
    bounds the omitted terms, is below 1e-12 of the sum. Heavy-tailed ones start at 256
    and double n until, past the largest term, fifty consecutive terms add less than
    1e-12 of the sum. Both rules are relative, so a series whose mass sits at large k
    (long times, fast clocks) is summed to the same precision as a short one.

    Raises:
        TruncationError: If neither rule has fired by ``cap``
    """
    bound = d.truncation_index()
    n = 256 if bound is None else bound
    while True:
        n = min(n, cap)
        weights = _weights(d, n, kind)
        terms = weights * values(n)
        total = math.fsum(terms)
        if bound is not None:
            remaining = weights[-1] if kind == "survival" else d.survival(n)
            if remaining <= max(config.THRESHOLD_TRUNCATION * abs(total), _TINY):
                return total
        else:
            stop = _heavy_tail_stop(terms)
            if stop is not None:
                logger.debug("heavy-tail rule stopped %s series at k=%d", d.name, stop)
                return math.fsum(terms[: stop + 1])
        if n >= cap:
            raise TruncationError(
                f"{d.name} threshold series not negligible by k={cap}; survival there {d.survival(cap):.3g}",
                remaining_mass=d.survival(cap),
                index=cap,
                partial=total,
            )
        n *= 2


def _shifted(vector):
    """v_k = u_(k-1) for k >= 1, v_0 = 0."""
    return np.concatenate(([0.0], vector[:-1]))


def _check_time(t, strict=False):
    if strict and not t > 0:
        raise DomainError(f"t must be > 0, got {t}")
    if not t >= 0:
        raise DomainError(f"t must be >= 0, got {t}")


def _check_cause(n):
    if n not in (1, 2):
        raise ParameterError(f"shock type must be 1 or 2, got {n}")


def _require_params(p, what):
    if not isinstance(p, ProcessParams):
        raise UnsupportedError(f"{what} needs the tempered-stable ProcessParams, got {type(p).__name__}")


# ---------------------------------------------------------------------------
# Hazard rates of the shock streams
# ---------------------------------------------------------------------------


def hazard_rate_closed(process, n):
    """Rate of a single type-n shock: lambda_n alpha (Lambda + theta)^(alpha - 1).

    For a general SubordinatedPoisson this is lambda_n psi'(Lambda).
    """
    _check_cause(n)
    if isinstance(process, ProcessParams):
        return levy_measure_mass(process, BivariateCount(1, 0) if n == 1 else BivariateCount(0, 1))
    return as_model(process).unit_jump_rate(n)


def _tempering_bracket(p, h, t):
    """The tempering Wright series W of order h, resummed when it diverges (theta >= Lambda).

    sum_i (theta/Lambda)^i / i! 1psi1[-Lambda^alpha t; (1, alpha); (1-h-i, alpha)] equals
    (1 + theta/Lambda)^-h 1psi1[-(Lambda + theta)^alpha t; (1, alpha); (1-h, alpha)].
    """
    rate = p.total_rate
    if p.theta < rate:
        return theta_series(float(rate), float(p.alpha), float(p.theta), h, float(t))
    spec = WrightSeriesSpec.psi11(-((rate + p.theta) ** p.alpha) * t, (1.0, p.alpha), (1.0 - h, p.alpha))
    return wright_1psi1(spec, log_scale=-h * math.log1p(p.theta / rate)).value


def hazard_rate(p, n, k, t, as_printed=False, cap=config.HOPPE_CAP):
    """Transition rate from k to k + e_n written as a ratio of two forms of the h-th derivative.

    alpha lambda_n (Lambda + theta)^(alpha - 1) exp(-t (Lambda + theta)^alpha) H / W
    (Lambda / (Lambda + theta))^h, where W is the tempering Wright series and H the
    Hoppe bracket at u = Lambda. The two derivatives cancel and the value is the
    constant of ``hazard_rate_closed``. ``as_printed=True`` drops the
    (Lambda / (Lambda + theta))^h factor.

    Args:
        p: ProcessParams
        n: Shock type 1 or 2
        k: BivariateCount or (k1, k2)
        t: Time > 0
        as_printed: Evaluate without the (Lambda / (Lambda + theta))^h factor
        cap: Largest admitted h

    Returns:
        float
    """
    _require_params(p, "hazard_rate")
    _check_cause(n)
    _check_time(t, strict=True)
    k = BivariateCount.coerce(k)
    h = k.total
    if h > cap:
        raise UnsupportedError(f"h={h} exceeds the derivative-route cap {cap} (raise it with --hoppe-cap)")

    rate = p.total_rate
    shifted = rate + p.theta
    bracket = _tempering_bracket(p, h, t)
    hoppe = hoppe_sum(p.alpha, p.theta, t, rate, h)
    log_factor = math.log(p.alpha * p.rate(n)) + (p.alpha - 1.0) * math.log(shifted) - t * shifted**p.alpha
    if not as_printed:
        log_factor += h * math.log(rate / shifted)
    return math.exp(log_factor) * hoppe / bracket


# ---------------------------------------------------------------------------
# Failure densities and reliability
# ---------------------------------------------------------------------------


def _pmf_values(model, t):
    return lambda n: total_count_pmf(model, t, n)


def _derivative_truncation(d, cap):
    """Largest k for series that need one Hoppe sum per threshold level."""
    bound = d.truncation_index()
    if bound is not None and bound - 1 <= cap:
        return bound
    remaining = d.survival(cap + 1)
    if remaining > config.THRESHOLD_TRUNCATION:
        raise TruncationError(
            f"{d.name} threshold keeps mass {remaining:.3g} beyond the derivative-route cap {cap}",
            remaining_mass=remaining,
            index=cap + 1,
        )
    return cap + 1


def failure_density(process, d, n, t, route="hazard", cap=config.HOPPE_CAP):
    """Sub-density g_n(t) of hitting the threshold with a type-n shock.

    ``route="hazard"``: g_n(t) = hazard_n sum_{k>=1} q_k P(Z(t) = k - 1), any subordinator.
    ``route="series"``: alpha lambda_n (Lambda + theta)^(alpha - 1) exp(-t psi(Lambda))
    sum_k q_k (-1)^(k-1)/(k-1)! (Lambda/(Lambda + theta))^(k-1) H_(k-1), tempered-stable only.

    Args:
        process: ProcessParams or SubordinatedPoisson
        d: ThresholdDist
        n: Shock type 1 or 2
        t: Time >= 0
        route: "hazard" or "series"
        cap: Largest Hoppe order for the series route

    Returns:
        float
    """
    _check_cause(n)
    _check_time(t)
    if route == "hazard":
        model = as_model(process)
        rate = hazard_rate_closed(process, n)
        return rate * threshold_series(d, lambda m: _shifted(total_count_pmf(model, t, m)), kind="pmf")
    if route != "series":
        raise ParameterError(f"unknown density route {route!r}; expected one of {', '.join(DENSITY_ROUTES)}")

    _require_params(process, "the series density route")
    p = process
    bound = _derivative_truncation(d, cap)
    weights = d.pmf_array(bound)
    ratio = p.total_rate / (p.total_rate + p.theta)
    total = []
    for k in range(1, bound + 1):
        if weights[k] == 0:
            continue
        h = k - 1
        log_scale = h * math.log(ratio) - special.gammaln(h + 1)
        sign = -1.0 if h % 2 else 1.0
        bracket = hoppe_sum(p.alpha, p.theta, t, p.total_rate, h)
        total.append(weights[k] * sign * math.exp(log_scale) * bracket)
    return hazard_rate_closed(p, n) * math.exp(-t * p.psi(p.total_rate)) * math.fsum(total)


def crossing_density(process, d, t):
    """Density of the crossing time: -dR/dt = -sum_k qbar_k dP(Z(t) = k)/dt."""
    _check_time(t)
    model = as_model(process)
    return -threshold_series(d, lambda m: pmf_time_derivative(model, t, m))


def reliability(process, d, t, route="series"):
    """P(T > t) = sum_k qbar_k P(Z(t) = k): survival means Z(t) < L.

    ``route="series"`` takes P(Z(t) = k) from the power-series recursion (any
    subordinator); ``route="wright"`` from the resummed Wright form (tempered stable).
    """
    _check_time(t)
    if t == 0:
        return 1.0
    if route == "series":
        return threshold_series(d, _pmf_values(as_model(process), t))
    if route == "wright":
        _require_params(process, "the Wright reliability route")
        p = process

        def values(m):
            return np.array(
                [tsfpp_pmf(p.total_rate, p.alpha, p.theta, k, t, form="resummed") for k in range(m + 1)]
            )

        return threshold_series(d, values)
    expected = ", ".join(RELIABILITY_ROUTES)
    raise ParameterError(f"unknown reliability route {route!r}; expected one of {expected}")


def geometric_success(d):
    """Success probability p when the threshold is geometric (or a point-mass mixture), else None."""
    if isinstance(d, (Geometric, DiscreteExponential)):
        return d.p
    if isinstance(d, GeometricMixture) and isinstance(d.mixing, PointMass):
        return d.mixing.p
    return None


def hazard_of_T(process, d, t, route="auto"):
    """Hazard rate g_T(t) / R(t) of the (crossing) failure time.

    Geometric thresholds have the constant hazard psi(Lambda p). Otherwise
    ``route="exact"`` divides crossing_density by reliability and ``route="numeric"``
    differentiates the reliability centrally with step 1e-5 max(1, t).
    """
    _check_time(t, strict=True)
    model = as_model(process)
    success = geometric_success(d)
    if route == "auto":
        if success is not None:
            return float(model.subordinator.laplace_exponent(model.total_rate * success))
        route = "numeric"

    value = reliability(model, d, t)
    if value < config.UNDERFLOW_FLOOR:
        raise DomainError(f"reliability {value:.3g} at t={t} is below the underflow floor")
    if route == "exact":
        return crossing_density(model, d, t) / value
    if route != "numeric":
        raise ParameterError(f"unknown hazard route {route!r}; expected 'auto', 'exact' or 'numeric'")
    step = min(config.DERIVATIVE_STEP * max(1.0, t), t / 2)
    slope = (reliability(model, d, t + step) - reliability(model, d, t - step)) / (2 * step)
    return -slope / value


def _cause_prob_series(p, d, n, cap):
    bound = _derivative_truncation(d, cap)
    weights = d.pmf_array(bound)
    ratio = p.total_rate / (p.total_rate + p.theta)
    total = []
    for k in range(1, bound + 1):
        if weights[k] == 0:
            continue
        h = k - 1
        log_scale = h * math.log(ratio) - special.gammaln(h + 1)
        sign = -1.0 if h % 2 else 1.0
        bracket = hoppe_occupation_sum(p.alpha, p.theta, p.total_rate, h)
        total.append(weights[k] * sign * math.exp(log_scale) * bracket)
    return hazard_rate_closed(p, n) * math.fsum(total)


def failure_cause_prob(process, d, n, route="auto", cap=config.HOPPE_CAP):
    """P(zeta = n): probability that the threshold is hit by a type-n shock.

    Routes:
        series: Hoppe occupation sums (tempered stable only)
        quadrature: integral of failure_density over [0, inf)
        occupation: hazard_n sum_k q_k integral_0^inf P(Z(t) = k - 1) dt (any subordinator)
        auto: series for ProcessParams, occupation otherwise or when the threshold is too heavy

    Under hitting semantics the two causes sum to less than one when the count can jump over L.
    """
    _check_cause(n)
    if route == "auto":
        if isinstance(process, ProcessParams):
            try:
                return _cause_prob_series(process, d, n, cap)
            except TruncationError as e:
                logger.debug("cause probability falls back to occupation route: %s", e)
        route = "occupation"
    if route == "series":
        _require_params(process, "the series cause-probability route")
        return _cause_prob_series(process, d, n, cap)
    if route == "occupation":
        model = as_model(process)
        levels = threshold_series(d, lambda m: _shifted(occupation_integrals(model, m)), kind="pmf")
        return hazard_rate_closed(process, n) * levels
    if route == "quadrature":
        model = as_model(process)
        # past this time P(Z(t) = 0) underflows; the integrand there is below exp(-700) for light thresholds
        horizon = _EXPONENT_LIMIT / model.jump_rate()
        return _quad(lambda s: failure_density(process, d, n, s), 0.0, horizon, f"P(zeta={n})")
    raise ParameterError(f"unknown cause route {route!r}; expected one of {', '.join(CAUSE_ROUTES)}")


# ---------------------------------------------------------------------------
# Geometric thresholds on general clocks
# ---------------------------------------------------------------------------


def _check_general(s, lambda1, lambda2, t):
    SubordinatedPoisson(s, lambda1, lambda2)
    _check_time(t)


def reliability_general_geometric(s, lambda1, lambda2, p, t):
    """exp(-t psi((lambda1 + lambda2) p)) for a geometric threshold on any subordinator clock."""
    _check_general(s, lambda1, lambda2, t)
    if not 0 < p <= 1:
        raise ParameterError(f"geometric p must lie in (0, 1], got {p}")
    return math.exp(-t * float(s.laplace_exponent((lambda1 + lambda2) * p)))


def reliability_mixture(s, lambda1, lambda2, mixing, t):
    """integral_0^1 exp(-t psi(Lambda p)) dG(p) by adaptive quadrature."""
    _check_general(s, lambda1, lambda2, t)
    if not isinstance(mixing, MixingLaw):
        raise ParameterError(f"expected a MixingLaw, got {type(mixing).__name__}")
    rate = lambda1 + lambda2
    if t == 0:
        return 1.0
    return mixing.expect(lambda q: math.exp(-t * float(s.laplace_exponent(rate * q))))


# ---------------------------------------------------------------------------
# Closed forms
# ---------------------------------------------------------------------------


def _check_closed_form(p, t, what):
    _require_params(p, what)
    _check_time(t)
    if not 0 < p.alpha < 1:
        raise UnsupportedError(f"{what} needs alpha in (0, 1), got {p.alpha}")
    if not p.theta > 0:
        raise UnsupportedError(f"{what} degenerates at theta = 0; use the quadrature route")


def reliability_uniform_closed(p, t):
    """Reliability under a uniformly mixed geometric threshold.

    exp(t theta^alpha)/(alpha Lambda)
    [theta E_l(t theta^alpha) - (Lambda + theta) E_l(t (Lambda + theta)^alpha)]
    with l = (alpha - 1)/alpha, evaluated as t^(-1/alpha) [Gamma(1/alpha, a) - Gamma(1/alpha, b)].
    """
    _check_closed_form(p, t, "the uniform closed form")
    if t == 0:
        return 1.0
    shape = 1.0 / p.alpha
    lower = t * p.theta**p.alpha
    upper = t * (p.total_rate + p.theta) ** p.alpha
    difference = upper_gamma_difference(shape, lower, upper)
    return math.exp(lower - shape * math.log(t)) * difference / (p.alpha * p.total_rate)


def reliability_lomax_closed(p, t):
    """Reliability under a truncated-Lomax mixed geometric threshold with a = Lambda/theta, b = alpha - 1.

    exp(t theta^alpha)(alpha - 1)/(alpha (1 - A^(1-alpha))) [E_m(z) - A^(1-alpha) E_m(z A^alpha)]
    with A = 1 + Lambda/theta, z = t theta^alpha, m = 2 - 1/alpha, evaluated as
    z^(1 - 1/alpha) [Gamma(1/alpha - 1, z) - Gamma(1/alpha - 1, z A^alpha)].
    """
    _check_closed_form(p, t, "the Lomax closed form")
    if t == 0:
        return 1.0
    ratio = 1.0 + p.total_rate / p.theta
    shape = 1.0 / p.alpha - 1.0
    lower = t * p.theta**p.alpha
    upper = lower * ratio**p.alpha
    norm = (p.alpha - 1.0) / (p.alpha * (1.0 - ratio ** (1.0 - p.alpha)))
    difference = upper_gamma_difference(shape, lower, upper)
    return norm * math.exp(lower - shape * math.log(lower)) * difference


def reliability_weibull_closed(p, t):
    """Reliability under a truncated-Weibull mixed geometric threshold.

    The Weibull parameters are tied to the process: a = 1/Lambda, b = alpha, c = -theta/Lambda.

    [1 - exp(-(t + 1) psi(Lambda))] / [(t + 1)(1 - exp(-psi(Lambda)))]; exactly 1 at t = 0.
    """
    _require_params(p, "the Weibull closed form")
    _check_time(t)
    psi = p.psi(p.total_rate)
    return math.expm1(-(t + 1.0) * psi) / ((t + 1.0) * math.expm1(-psi))


def reliability_yule_simon(p, rho, t):
    """Reliability under a Yule–Simon threshold.

    P(Z(t) = 0) + integral_0^1 (1 - z)^rho d/dz exp(-t psi(Lambda (1 - z))) dz,
    since qbar_k = k integral_0^1 z^(k-1) (1 - z)^rho dz.
    """
    model = as_model(p)
    if not rho > 0:
        raise ParameterError(f"yule-simon rho must be > 0, got {rho}")
    _check_time(t)
    if t == 0:
        return 1.0
    rate = model.total_rate
    clock = model.subordinator

    def integrand(z):
        u = rate * (1.0 - z)
        pgf = math.exp(-t * float(clock.laplace_exponent(u)))
        return (1.0 - z) ** rho * pgf * t * rate * float(clock.laplace_exponent_derivative(u))

    return math.exp(-t * model.jump_rate()) + _quad(integrand, 0.0, 1.0, "the Yule–Simon reliability")


# ---------------------------------------------------------------------------
# Failure law on a grid
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FailureLaw:
    """Tabulated law of the failure time T and the cause zeta.

    Attributes:
        semantics: "crossing" (first t with Z(t) >= L) or "hitting" (Z(t) = L by a single shock)
        times: Grid points
        reliability: P(T > t) on the grid
        densities: Array of shape (2, m) with the cause-specific densities g_1, g_2
        cause_probabilities: (P(zeta = 1), P(zeta = 2))
    """

    semantics: str
    times: tuple
    reliability: np.ndarray
    densities: np.ndarray
    cause_probabilities: tuple

    @property
    def defect(self):
        """Probability of never failing (overshoot under hitting semantics)."""
        return max(0.0, 1.0 - sum(self.cause_probabilities))

    def to_dict(self):
        """Plain-Python form for JSON output."""
        return {
            "semantics": self.semantics,
            "times": list(self.times),
            "reliability": self.reliability.tolist(),
            "g1": self.densities[0].tolist(),
            "g2": self.densities[1].tolist(),
            "cause_probabilities": list(self.cause_probabilities),
        }


def failure_law(process, d, t_grid, semantics="crossing"):
    """Assemble reliability, cause-specific densities and cause probabilities on ``t_grid``.

    Crossing: R from the threshold series, g_n = (lambda_n/Lambda) crossing_density and
    P(zeta = n) = lambda_n/Lambda (the L-th shock is of type n with that probability).
    Hitting: g_n from ``failure_density``, R(t) = 1 - integral_0^t (g_1 + g_2) and
    P(zeta = n) from ``failure_cause_prob``.
    """
    if semantics not in SEMANTICS:
        raise ParameterError(f"semantics must be one of {', '.join(SEMANTICS)}, got {semantics!r}")
    times = tuple(float(x) for x in t_grid)
    if any(x < 0 for x in times) or any(b < a for a, b in zip(times, times[1:])):
        raise ParameterError("t_grid must be nonnegative and nondecreasing")
    model = as_model(process)
    shares = np.array([model.lambda1, model.lambda2]) / model.total_rate

    if semantics == "crossing":
        values = np.array([reliability(model, d, x) for x in times])
        crossing = np.array([crossing_density(model, d, x) for x in times])
        densities = np.outer(shares, crossing)
        causes = tuple(float(x) for x in shares)
    else:
        densities = np.array([[failure_density(process, d, n, x) for x in times] for n in (1, 2)])
        causes = tuple(failure_cause_prob(process, d, n) for n in (1, 2))

        def total(s):
            return failure_density(process, d, 1, s) + failure_density(process, d, 2, s)

        edges = (0.0,) + times
        steps = [
            _quad(total, a, b, "the hitting distribution") if b > a else 0.0 for a, b in zip(edges, edges[1:])
        ]
        values = 1.0 - np.cumsum(steps)
    return FailureLaw(semantics, times, np.asarray(values, dtype=float), densities, causes)


def failure_cause_prob_until(process, d, n, horizon):
    """P(zeta = n, T <= horizon) under hitting semantics: integral_0^horizon g_n(t) dt."""
    _check_cause(n)
    _check_time(horizon)
    if horizon == 0:
        return 0.0
    return _quad(lambda s: failure_density(process, d, n, s), 0.0, horizon, f"P(zeta={n}, T<={horizon:g})")


def hitting_reliability(process, d, t):
    """P(T > t) under hitting semantics, including paths that never hit: 1 - integral_0^t (g_1 + g_2)."""
    return 1.0 - failure_cause_prob_until(process, d, 1, t) - failure_cause_prob_until(process, d, 2, t)
