"""
The bivariate tempered space-fractional Poisson process (BTSFPP).

Two independent Poisson processes with rates lambda1, lambda2 run on a common
tempered-stable clock. This module contains:
- Parameter and state types (ProcessParams, BivariateCount, CountPath) and the general
  SubordinatedPoisson model for any subordinator
- The joint pmf by three independent routes (Wright series, Hoppe derivative sum,
  power-series recursion of the pgf) and the automatic route choice
- The pgf, the residuals of its governing equations, the Lévy measure of the count process
- Count and path simulation
"""

import functools
import logging
import math
from dataclasses import dataclass

import mpmath
import numpy as np
from scipy import special

from . import config
from .errors import (
    DomainError,
    ParameterError,
    SeriesConvergenceError,
    TruncationError,
    UnsupportedError,
)
from .special_fn import CompensatedSum, WrightSeriesSpec, falling_factorial, real_binomial, wright_1psi1
from .subordinator import Deterministic, SubordinatorSpec, TemperedStable, sample_path

logger = logging.getLogger(__name__)

PMF_ROUTES = ("auto", "wright", "resummed", "derivative", "recursion")

# rng.poisson rejects means close to 2**63; counts this large never reach a tabulated cell
_POISSON_MEAN_CAP = 1e15

# scaled recursion values are renormalized above this, well short of overflow
_RESCALE_LIMIT = 1e200


@dataclass(frozen=True)
class ProcessParams:
    """BTSFPP parameters.

    Attributes:
        alpha: Stability index in (0, 1]; alpha = 1 is the ordinary bivariate Poisson process
        theta: Tempering parameter >= 0
        lambda1: Rate of type-1 shocks (> 0)
        lambda2: Rate of type-2 shocks (> 0)
    """

    alpha: float
    theta: float
    lambda1: float
    lambda2: float

    def __post_init__(self):
        if not 0 < self.alpha <= 1:
            raise ParameterError(f"alpha must lie in (0, 1], got {self.alpha}")
        if not self.theta >= 0:
            raise ParameterError(f"theta must be >= 0, got {self.theta}")
        if not self.lambda1 > 0:
            raise ParameterError(f"lambda1 must be > 0, got {self.lambda1}")
        if not self.lambda2 > 0:
            raise ParameterError(f"lambda2 must be > 0, got {self.lambda2}")

    @property
    def total_rate(self):
        """Lambda = lambda1 + lambda2."""
        return self.lambda1 + self.lambda2

    def rate(self, n):
        """Rate of shock type n (1 or 2)."""
        if n == 1:
            return self.lambda1
        if n == 2:
            return self.lambda2
        raise ParameterError(f"shock type must be 1 or 2, got {n}")

    def psi(self, u):
        """Tempered-stable Laplace exponent (u + theta)^alpha - theta^alpha (u for alpha = 1)."""
        return (u + self.theta) ** self.alpha - self.theta**self.alpha

    def subordinator(self):
        """The clock: TemperedStable(alpha, theta), or unit drift when alpha = 1."""
        if self.alpha == 1:
            return Deterministic(1.0)
        return TemperedStable(self.alpha, self.theta)

    def model(self):
        """The same process as a SubordinatedPoisson."""
        return SubordinatedPoisson(self.subordinator(), self.lambda1, self.lambda2)

    def to_dict(self):
        """Parameters as a plain dict."""
        return {"alpha": self.alpha, "theta": self.theta, "lambda1": self.lambda1, "lambda2": self.lambda2}


@dataclass(frozen=True)
class BivariateCount:
    """A lattice point (k1, k2) of shock counts."""

    k1: int
    k2: int

    def __post_init__(self):
        for name, value in (("k1", self.k1), ("k2", self.k2)):
            if int(value) != value or value < 0:
                raise ParameterError(f"{name} must be a nonnegative integer, got {value}")
        object.__setattr__(self, "k1", int(self.k1))
        object.__setattr__(self, "k2", int(self.k2))

    @property
    def total(self):
        """h = k1 + k2."""
        return self.k1 + self.k2

    @classmethod
    def coerce(cls, k):
        """Accept a BivariateCount or a (k1, k2) pair."""
        if isinstance(k, cls):
            return k
        k1, k2 = k
        return cls(k1, k2)

    @classmethod
    def diagonal(cls, h):
        """All counts with k1 + k2 = h, in order of increasing k1."""
        return [cls(k1, h - k1) for k1 in range(h + 1)]


@dataclass(frozen=True)
class SubordinatedPoisson:
    """Bivariate Poisson pair (lambda1, lambda2) run on an arbitrary subordinator clock."""

    subordinator: SubordinatorSpec
    lambda1: float
    lambda2: float

    def __post_init__(self):
        if not isinstance(self.subordinator, SubordinatorSpec):
            raise ParameterError(f"expected a SubordinatorSpec, got {type(self.subordinator).__name__}")
        if not self.lambda1 > 0 or not self.lambda2 > 0:
            raise ParameterError(f"rates must be > 0, got {self.lambda1}, {self.lambda2}")

    @property
    def total_rate(self):
        """Lambda = lambda1 + lambda2."""
        return self.lambda1 + self.lambda2

    def rate(self, n):
        """Rate of shock type n (1 or 2)."""
        if n not in (1, 2):
            raise ParameterError(f"shock type must be 1 or 2, got {n}")
        return self.lambda1 if n == 1 else self.lambda2

    def jump_rate(self):
        """Total rate psi(Lambda) of jumps of the count process Z = N1 + N2."""
        return float(self.subordinator.laplace_exponent(self.total_rate))

    def jump_masses(self, n):
        """Rates m_1..m_n of count jumps of size 1..n."""
        return self.subordinator.count_jump_masses(self.total_rate, n)

    def unit_jump_rate(self, n):
        """Rate of single type-n shocks: lambda_n psi'(Lambda)."""
        return self.rate(n) * float(self.subordinator.laplace_exponent_derivative(self.total_rate))

    def to_dict(self):
        """Serializable description."""
        return {"subordinator": self.subordinator.to_dict(), "lambda1": self.lambda1, "lambda2": self.lambda2}


@dataclass(frozen=True)
class CountPath:
    """A simulated BTSFPP path on a grid.

    Attributes:
        times: Grid points
        clock: Subordinator values S(t_i)
        counts: Array of shape (m + 1, 2) with (N1(t_i), N2(t_i))
    """

    times: tuple
    clock: np.ndarray
    counts: np.ndarray

    def events(self):
        """Grid times at which the counts moved, with the jump vector (j1, j2)."""
        steps = np.diff(self.counts, axis=0)
        moved = np.flatnonzero(steps.sum(axis=1))
        return [(self.times[i + 1], (int(steps[i, 0]), int(steps[i, 1]))) for i in moved]

    @property
    def totals(self):
        """Z(t_i) = N1(t_i) + N2(t_i)."""
        return self.counts.sum(axis=1)


def as_model(process):
    """Return a SubordinatedPoisson for either a ProcessParams or a SubordinatedPoisson."""
    if isinstance(process, SubordinatedPoisson):
        return process
    if isinstance(process, ProcessParams):
        return process.model()
    raise ParameterError(f"expected ProcessParams or SubordinatedPoisson, got {type(process).__name__}")


def _require_positive_time(t):
    if not t > 0:
        raise DomainError(f"t must be > 0 for series routes, got {t}")


def _log_thinning(lambda1, lambda2, k):
    """Log of the binomial split probability h!/(k1! k2!) (lambda1/Lambda)^k1 (lambda2/Lambda)^k2."""
    total = lambda1 + lambda2
    return (
        special.gammaln(k.total + 1)
        - special.gammaln(k.k1 + 1)
        - special.gammaln(k.k2 + 1)
        + k.k1 * math.log(lambda1 / total)
        + k.k2 * math.log(lambda2 / total)
    )


def bivariate_poisson_pmf(lambda1, lambda2, k, s):
    """P(N1(s) = k1, N2(s) = k2) for independent Poisson processes.

    Args:
        lambda1: Rate of N1
        lambda2: Rate of N2
        k: BivariateCount or (k1, k2)
        s: Time >= 0

    Returns:
        float
    """
    k = BivariateCount.coerce(k)
    if not s >= 0:
        raise DomainError(f"s must be >= 0, got {s}")
    if s == 0:
        return 1.0 if k.total == 0 else 0.0
    log_value = (
        k.k1 * math.log(lambda1)
        + k.k2 * math.log(lambda2)
        - special.gammaln(k.k1 + 1)
        - special.gammaln(k.k2 + 1)
        + k.total * math.log(s)
        - (lambda1 + lambda2) * s
    )
    return math.exp(log_value)


# ---------------------------------------------------------------------------
# Wright-series route
# ---------------------------------------------------------------------------


@functools.lru_cache(maxsize=4096)
def theta_series(rate, alpha, theta, n, t, extended_precision=False, log_scale=0.0):
    """Outer tempering series sum_i (theta/rate)^i / i! 1psi1[-rate^alpha t; (1, alpha); (1-n-i, alpha)].

    Converges only for theta < rate (it is a Taylor expansion about ``rate`` with radius
    ``rate``). Truncated by the same ten-small-terms rule as the inner Wright series, once
    the terms have started to decrease. Every term is scaled by exp(log_scale) inside the
    Wright sums.

    Returns:
        float
    """
    z = -(rate**alpha) * t

    def inner(i, scale):
        spec = WrightSeriesSpec.psi11(z, (1.0, alpha), (1.0 - n - i, alpha))
        return wright_1psi1(spec, extended_precision=extended_precision, log_scale=scale).value

    if theta == 0:
        return inner(0, log_scale)
    if theta >= rate:
        raise SeriesConvergenceError(
            f"tempering series diverges for theta={theta:g} >= Lambda={rate:g}; use the resummed form",
            partial=math.nan,
        )

    log_ratio = math.log(theta / rate)
    acc = CompensatedSum()
    streak = 0
    previous = math.inf
    for i in range(config.MAX_TERMS):
        term = inner(i, log_scale + i * log_ratio - special.gammaln(i + 1))
        acc.add(term)
        decreasing = abs(term) <= previous
        previous = abs(term)
        if decreasing and abs(term) < config.RELATIVE_TOLERANCE * max(abs(acc.value), 1.0):
            streak += 1
            if streak >= config.SMALL_TERM_STREAK:
                logger.debug("tempering series for n=%d converged after %d terms", n, i + 1)
                return acc.value
        else:
            streak = 0
    raise SeriesConvergenceError(
        f"tempering series for n={n} did not converge in {config.MAX_TERMS} terms",
        partial=acc.value,
        terms_used=config.MAX_TERMS,
    )


@functools.lru_cache(maxsize=4096)
def _tsfpp_pmf_cached(rate, alpha, theta, k, t, form, extended_precision):
    sign = -1.0 if k % 2 else 1.0
    # 1/k! (and the resummation factor) ride inside the series so large k stays finite
    log_scale = -special.gammaln(k + 1)
    if form == "series":
        series = theta_series(rate, alpha, theta, k, t, extended_precision, log_scale)
    elif form == "resummed":
        spec = WrightSeriesSpec.psi11(-((rate + theta) ** alpha) * t, (1.0, alpha), (1.0 - k, alpha))
        log_scale -= k * math.log1p(theta / rate)
        series = wright_1psi1(spec, extended_precision=extended_precision, log_scale=log_scale).value
    else:
        raise ParameterError(f"unknown Wright form {form!r}; expected 'series' or 'resummed'")
    return sign * math.exp(t * theta**alpha) * series


def tsfpp_pmf(rate, alpha, theta, k, t, form="series", extended_precision=False):
    """Univariate tempered space-fractional Poisson pmf P(N(S(t)) = k) in Wright-series form.

    ``form="series"`` evaluates (-1)^k/k! exp(t theta^alpha) times the tempering series
    (valid for theta < rate). ``form="resummed"`` uses the equivalent single Wright
    function (-1)^k/k! exp(t theta^alpha) (1 + theta/rate)^-k 1psi1[-(rate+theta)^alpha t;
    (1, alpha); (1-k, alpha)], valid for every theta and stable for large k.

    Args:
        rate: Poisson rate
        alpha: Stability index in (0, 1]
        theta: Tempering parameter >= 0
        k: Count
        t: Time > 0
        form: "series" or "resummed"
        extended_precision: Evaluate the Wright series in mpmath

    Returns:
        float
    """
    _require_positive_time(t)
    if not rate > 0 or not 0 < alpha <= 1 or not theta >= 0:
        raise ParameterError(f"invalid TSFPP parameters rate={rate}, alpha={alpha}, theta={theta}")
    if int(k) != k or k < 0:
        raise ParameterError(f"k must be a nonnegative integer, got {k}")
    return _tsfpp_pmf_cached(
        float(rate), float(alpha), float(theta), int(k), float(t), form, extended_precision
    )


def btsfpp_pmf_wright(p, k, t, form="series", extended_precision=False):
    """Joint pmf through the Wright-series expression: binomial thinning times the total-count pmf.

    Args:
        p: ProcessParams
        k: BivariateCount or (k1, k2)
        t: Time > 0
        form: "series" (tempering series, theta < Lambda) or "resummed"
        extended_precision: Evaluate the Wright series in mpmath

    Returns:
        float
    """
    k = BivariateCount.coerce(k)
    total = tsfpp_pmf(p.total_rate, p.alpha, p.theta, k.total, t, form, extended_precision)
    return math.exp(_log_thinning(p.lambda1, p.lambda2, k)) * total


# ---------------------------------------------------------------------------
# Derivative (Hoppe) route
# ---------------------------------------------------------------------------


def _hoppe_inner(alpha, theta, u, h, one):
    """X_j = sum_i C(j, i) (alpha i)_h (u + theta)^(alpha i) (-theta^alpha)^(j - i), j = 0..h."""
    base = (one * u + theta) ** alpha
    shift = -((one * theta) ** alpha)
    falling = [falling_factorial(alpha * i * one, h) for i in range(h + 1)]
    inner = []
    for j in range(h + 1):
        total = 0 * one
        for i in range(j + 1):
            if falling[i] == 0:
                continue
            total += math.comb(j, i) * falling[i] * base**i * shift ** (j - i)
        inner.append(total)
    return inner


def _hoppe_combine(inner, psi, time_weights, h, one):
    """sum_k w_k sum_j C(k, j) (-1)^j psi^(k-j) X_j, with w_k supplied by the caller."""
    total = 0 * one
    for k in range(h + 1):
        partial = 0 * one
        for j in range(k + 1):
            partial += math.comb(k, j) * (-1) ** j * psi ** (k - j) * inner[j]
        total += time_weights[k] * partial
    return total


def _use_extended(h, extended_precision):
    return h > config.HOPPE_FLOAT_LIMIT if extended_precision is None else extended_precision


def hoppe_sum(alpha, theta, t, u, h, extended_precision=None):
    """Hoppe bracket H with d^h/du^h exp(-t psi(u)) = exp(-t psi(u)) (u + theta)^-h H.

    H = sum_{k<=h} t^k/k! sum_{j<=k} C(k, j) (-1)^j psi(u)^(k-j) X_j. The finite sum loses
    roughly a factor 4^h of relative precision, so orders above ``config.HOPPE_FLOAT_LIMIT``
    run in mpmath unless ``extended_precision`` says otherwise.
    """
    if int(h) != h or h < 0:
        raise ParameterError(f"derivative order must be a nonnegative integer, got {h}")
    h = int(h)
    if _use_extended(h, extended_precision):
        with mpmath.workdps(config.EXTENDED_PRECISION_DIGITS):
            one = mpmath.mpf(1)
            psi = (one * u + theta) ** alpha - (one * theta) ** alpha
            weights = [(one * t) ** k / math.factorial(k) for k in range(h + 1)]
            value = _hoppe_combine(_hoppe_inner(alpha, theta, u, h, one), psi, weights, h, one)
            return float(value)
    psi = (u + theta) ** alpha - theta**alpha
    weights = [t**k / math.factorial(k) for k in range(h + 1)]
    return float(_hoppe_combine(_hoppe_inner(alpha, theta, u, h, 1.0), psi, weights, h, 1.0))


def hoppe_occupation_sum(alpha, theta, u, h, extended_precision=None):
    """Time integral of the Hoppe bracket against exp(-t psi(u)).

    integral_0^inf exp(-t psi) t^k/k! dt = psi^-(k+1), so this returns
    (1/psi) sum_k sum_j C(k, j) (-1)^j psi^-j X_j.
    """
    h = int(h)
    if _use_extended(h, extended_precision):
        with mpmath.workdps(config.EXTENDED_PRECISION_DIGITS):
            one = mpmath.mpf(1)
            psi = (one * u + theta) ** alpha - (one * theta) ** alpha
            weights = [psi ** (-k - 1) for k in range(h + 1)]
            return float(_hoppe_combine(_hoppe_inner(alpha, theta, u, h, one), psi, weights, h, one))
    psi = (u + theta) ** alpha - theta**alpha
    weights = [psi ** (-k - 1) for k in range(h + 1)]
    return float(_hoppe_combine(_hoppe_inner(alpha, theta, u, h, 1.0), psi, weights, h, 1.0))


def hoppe_derivative(alpha, theta, t, u, h, extended_precision=None):
    """d^h/du^h exp(-t((u + theta)^alpha - theta^alpha)) by Hoppe's formula."""
    psi = (u + theta) ** alpha - theta**alpha
    return math.exp(-t * psi - h * math.log(u + theta)) * hoppe_sum(alpha, theta, t, u, h, extended_precision)


def btsfpp_pmf_derivative(p, k, t, cap=config.HOPPE_CAP, extended_precision=None):
    """Joint pmf (lambda1^k1 lambda2^k2 / (k1! k2!)) (-1)^h d^h/du^h E[exp(-u S(t))] at u = Lambda.

    Args:
        p: ProcessParams
        k: BivariateCount or (k1, k2)
        t: Time > 0
        cap: Largest admitted h
        extended_precision: None (automatic), True or False

    Returns:
        float
    """
    k = BivariateCount.coerce(k)
    _require_positive_time(t)
    h = k.total
    if h > cap:
        raise UnsupportedError(f"h={h} exceeds the derivative-route cap {cap} (raise it with --hoppe-cap)")
    rate = p.total_rate
    log_prefactor = (
        k.k1 * math.log(p.lambda1)
        + k.k2 * math.log(p.lambda2)
        - special.gammaln(k.k1 + 1)
        - special.gammaln(k.k2 + 1)
        - t * p.psi(rate)
        - h * math.log(rate + p.theta)
    )
    sign = -1.0 if h % 2 else 1.0
    return sign * math.exp(log_prefactor) * hoppe_sum(p.alpha, p.theta, t, rate, h, extended_precision)


# ---------------------------------------------------------------------------
# Recursion route (any subordinator)
# ---------------------------------------------------------------------------


def total_count_pmf(process, t, max_h):
    """P(Z(t) = h) for h = 0..max_h, Z = N1 + N2, for any subordinator clock.

    The pgf of Z(t) is exp(-t psi(Lambda (1 - u))) = exp(-t psi(Lambda) + t sum_j m_j u^j)
    with jump masses m_j >= 0, so its coefficients follow the recursion
    n G_n = t sum_j j m_j G_(n-j), whose terms are all nonnegative.

    The recursion runs on G_n exp(t psi(Lambda)), starting from 1, and carries the
    log of that factor separately. Entries come back as 0 only when they are below
    the smallest positive float themselves.

    Args:
        process: ProcessParams or SubordinatedPoisson
        t: Time >= 0
        max_h: Largest count

    Returns:
        ndarray of shape (max_h + 1,)
    """
    model = as_model(process)
    if not t >= 0:
        raise DomainError(f"t must be >= 0, got {t}")
    log_offset = -t * model.jump_rate()
    pmf = np.zeros(max_h + 1)
    pmf[0] = 1.0
    if max_h and t > 0:
        weighted = t * model.jump_masses(max_h) * np.arange(1, max_h + 1)
        for n in range(1, max_h + 1):
            value = np.dot(weighted[:n], pmf[n - 1 :: -1]) / n
            if value > _RESCALE_LIMIT:
                pmf[:n] /= value
                log_offset += math.log(value)
                value = 1.0
            pmf[n] = value
    with np.errstate(divide="ignore"):
        return np.exp(np.log(pmf) + log_offset)


def pmf_time_derivative(process, t, max_h):
    """d/dt P(Z(t) = h), h = 0..max_h, from dG/dt = -psi(Lambda (1 - u)) G.

    Returns:
        ndarray of shape (max_h + 1,)
    """
    model = as_model(process)
    pmf = total_count_pmf(model, t, max_h)
    masses = model.jump_masses(max_h) if max_h else np.zeros(0)
    derivative = -model.jump_rate() * pmf
    for n in range(1, max_h + 1):
        derivative[n] += np.dot(masses[:n], pmf[n - 1 :: -1])
    return derivative


def occupation_integrals(process, max_h):
    """Expected time the count spends at each level: integral_0^inf P(Z(t) = h) dt, h = 0..max_h.

    These are the coefficients of 1/psi(Lambda (1 - u)), obtained from the reciprocal
    recursion b_n = sum_j m_j b_(n-j) / psi(Lambda) (all terms nonnegative).
    """
    model = as_model(process)
    rate = model.jump_rate()
    masses = model.jump_masses(max_h) if max_h else np.zeros(0)
    values = np.zeros(max_h + 1)
    values[0] = 1.0 / rate
    for n in range(1, max_h + 1):
        values[n] = np.dot(masses[:n], values[n - 1 :: -1]) / rate
    return values


def tail_index(process, t, eps=config.TAIL_EPSILON, max_h=config.TAIL_MAX_H):
    """Smallest K with sum_{h<=K} P(Z(t)=h) >= 1 - eps and P(Z(t)=K) < eps/10.

    Raises:
        TruncationError: If K would exceed ``max_h`` (untempered stable clocks have
            polynomial tails and routinely need this)
    """
    n = min(config.TAIL_INITIAL_H, max_h)
    while True:
        pmf = total_count_pmf(process, t, n)
        cumulative = np.cumsum(pmf)
        ok = (cumulative >= 1.0 - eps) & (pmf < eps / 10.0)
        if ok.any():
            index = int(np.argmax(ok))
            logger.debug("tail rule: K=%d for t=%g, eps=%g", index, t, eps)
            return index
        if n >= max_h:
            raise TruncationError(
                f"tail rule needs K > {max_h}; remaining mass {1.0 - cumulative[-1]:.3g} (eps={eps:g})",
                remaining_mass=float(1.0 - cumulative[-1]),
                index=n,
                partial=float(cumulative[-1]),
            )
        n = min(2 * n, max_h)


def btsfpp_pmf_recursion(p, k, t):
    """Joint pmf from the power-series recursion of the total count."""
    k = BivariateCount.coerce(k)
    model = as_model(p)
    total = total_count_pmf(model, t, k.total)[k.total]
    return math.exp(_log_thinning(model.lambda1, model.lambda2, k)) * total


def btsfpp_pmf(p, k, t, route="auto"):
    """Joint pmf P(N1(t) = k1, N2(t) = k2) by the requested route.

    ``auto`` uses the derivative route for h <= ``config.DERIVATIVE_ROUTE_MAX_H`` and
    the resummed Wright form beyond.
    """
    k = BivariateCount.coerce(k)
    if route == "auto":
        route = "derivative" if k.total <= config.DERIVATIVE_ROUTE_MAX_H else "resummed"
    if route == "derivative":
        return btsfpp_pmf_derivative(p, k, t)
    if route == "wright":
        return btsfpp_pmf_wright(p, k, t, form="series")
    if route == "resummed":
        return btsfpp_pmf_wright(p, k, t, form="resummed")
    if route == "recursion":
        _require_positive_time(t)
        return btsfpp_pmf_recursion(p, k, t)
    raise ParameterError(f"unknown pmf route {route!r}; expected one of {', '.join(PMF_ROUTES)}")


def marginal_pmf(p, n, k, t):
    """P(N_n(t) = k): each component alone is a TSFPP with its own rate."""
    return tsfpp_pmf(p.rate(n), p.alpha, p.theta, k, t, form="resummed")


# ---------------------------------------------------------------------------
# pgf and governing equations
# ---------------------------------------------------------------------------


def _check_unit_interval(u, name):
    if not 0 <= u <= 1:
        raise DomainError(f"{name} must lie in [0, 1], got {u}")


def _pgf_exponent(p, u1, u2):
    return (p.lambda1 * (1 - u1) + p.lambda2 * (1 - u2) + p.theta) ** p.alpha - p.theta**p.alpha


def btsfpp_pgf(p, u1, u2, t):
    """E[u1^N1(t) u2^N2(t)] = exp(-t([lambda1(1-u1) + lambda2(1-u2) + theta]^alpha - theta^alpha))."""
    _check_unit_interval(u1, "u1")
    _check_unit_interval(u2, "u2")
    if not t >= 0:
        raise DomainError(f"t must be >= 0, got {t}")
    return math.exp(-t * _pgf_exponent(p, u1, u2))


def pgf_ode_residual(p, u1, u2, t, step=config.DERIVATIVE_STEP):
    """|dG/dt + ([lambda1(1-u1) + lambda2(1-u2) + theta]^alpha - theta^alpha) G| by central difference."""
    if not t > step > 0:
        raise DomainError(f"need t > step > 0, got t={t}, step={step}")
    derivative = (btsfpp_pgf(p, u1, u2, t + step) - btsfpp_pgf(p, u1, u2, t - step)) / (2 * step)
    return abs(derivative + _pgf_exponent(p, u1, u2) * btsfpp_pgf(p, u1, u2, t))


def pmf_pde_residual(p, k, t, step=config.DERIVATIVE_STEP, route="auto"):
    """Residual of the fractional shift-operator equation for the joint pmf at k.

    The right side is -Lambda^alpha [(I - (lambda1 B1 + lambda2 B2 - theta)/Lambda)^alpha
    - (theta/Lambda)^alpha] q(k, t), with the fractional power expanded binomially around
    1 + theta/Lambda and (lambda1 B1 + lambda2 B2)^j expanded multinomially; the j-sum
    stops at j = h because shifts below the origin vanish. The left side is a central
    difference of q(k, .).

    Returns:
        float: |dq/dt - right side|
    """
    k = BivariateCount.coerce(k)
    if not t > step > 0:
        raise DomainError(f"need t > step > 0, got t={t}, step={step}")
    rate = p.total_rate
    ratio = 1.0 + p.theta / rate

    def q(k1, k2, time=t):
        return btsfpp_pmf(p, BivariateCount(k1, k2), time, route=route)

    operator = 0.0
    for j in range(k.total + 1):
        coefficient = real_binomial(p.alpha, j) * ratio ** (p.alpha - j) * (-1) ** j / rate**j
        if coefficient == 0:
            continue
        shifted = 0.0
        for r1 in range(max(0, j - k.k2), min(j, k.k1) + 1):
            r2 = j - r1
            shifted += (
                math.comb(j, r1) * p.lambda1**r1 * p.lambda2**r2 * q(k.k1 - r1, k.k2 - r2)
            )
        operator += coefficient * shifted
    operator -= (p.theta / rate) ** p.alpha * q(k.k1, k.k2)
    right = -(rate**p.alpha) * operator

    derivative = (q(k.k1, k.k2, t + step) - q(k.k1, k.k2, t - step)) / (2 * step)
    return abs(derivative - right)


# ---------------------------------------------------------------------------
# Lévy measure
# ---------------------------------------------------------------------------


def levy_measure_mass(p, k, printed_base=False):
    """Lévy measure of the count process at the jump vector k != (0, 0).

    (lambda1^k1 lambda2^k2 / (k1! k2!)) alpha Gamma(h - alpha)/Gamma(1 - alpha) (theta + Lambda)^(alpha - h).
    With ``printed_base=True`` the base is theta + h instead of theta + Lambda.
    """
    k = BivariateCount.coerce(k)
    h = k.total
    if h == 0:
        raise DomainError("the Lévy measure has no mass at k = (0, 0)")
    # Gamma(h - alpha)/Gamma(1 - alpha) as a finite product; it vanishes for alpha = 1, h >= 2
    gamma_ratio = 1.0
    for m in range(1, h):
        gamma_ratio *= m - p.alpha
    base = p.theta + (h if printed_base else p.total_rate)
    weight = p.lambda1**k.k1 * p.lambda2**k.k2 / (math.factorial(k.k1) * math.factorial(k.k2))
    return weight * p.alpha * gamma_ratio * base ** (p.alpha - h)


def levy_measure_total(p, max_h=60, printed_base=False):
    """Sum of the Lévy masses over 1 <= h <= max_h (approaches psi(Lambda) with the corrected base)."""
    acc = CompensatedSum()
    for h in range(1, max_h + 1):
        for k in BivariateCount.diagonal(h):
            acc.add(levy_measure_mass(p, k, printed_base=printed_base))
    return acc.value


# ---------------------------------------------------------------------------
# Wright / exponential identity
# ---------------------------------------------------------------------------


def wright_exponential_identity_residual(p, u, t, form="series", extended_precision=False):
    """|exp(-t((Lambda(1-u) + theta)^alpha - theta^alpha)) - sum_k u^k p(k, t)| with p in Wright form.

    The right side is the double Wright series; it is summed until ten consecutive terms
    fall below the relative tolerance. Near u = 1 the tempering series loses precision at
    large k; ``form="resummed"`` avoids that.
    """
    _check_unit_interval(u, "u")
    _require_positive_time(t)
    rate = p.total_rate
    left = math.exp(-t * ((rate * (1 - u) + p.theta) ** p.alpha - p.theta**p.alpha))
    acc = CompensatedSum()
    streak = 0
    previous = math.inf
    for k in range(config.TAIL_MAX_H + 1):
        term = u**k * tsfpp_pmf(rate, p.alpha, p.theta, k, t, form, extended_precision)
        acc.add(term)
        decreasing = abs(term) <= previous
        previous = abs(term)
        if decreasing and abs(term) < config.RELATIVE_TOLERANCE * max(abs(acc.value), 1.0):
            streak += 1
            if streak >= config.SMALL_TERM_STREAK:
                return abs(left - acc.value)
        else:
            streak = 0
    raise SeriesConvergenceError(
        f"identity series did not converge within {config.TAIL_MAX_H} terms",
        partial=acc.value,
        terms_used=config.TAIL_MAX_H,
    )


# ---------------------------------------------------------------------------
# Simulation
# ---------------------------------------------------------------------------


def simulate_counts(process, t, rng, size=None):
    """Draw (N1(t), N2(t)): s ~ S(t), then independent Poisson(lambda1 s), Poisson(lambda2 s).

    Args:
        process: ProcessParams or SubordinatedPoisson
        t: Time > 0
        rng: numpy Generator
        size: None for one BivariateCount, or a number of draws

    Returns:
        BivariateCount, or int ndarray of shape (size, 2)
    """
    model = as_model(process)
    _require_positive_time(t)
    count = 1 if size is None else int(size)
    clock = model.subordinator.sample_increment(t, rng, size=count)
    draws = np.empty((count, 2), dtype=np.int64)
    draws[:, 0] = rng.poisson(np.minimum(model.lambda1 * clock, _POISSON_MEAN_CAP))
    draws[:, 1] = rng.poisson(np.minimum(model.lambda2 * clock, _POISSON_MEAN_CAP))
    if size is None:
        return BivariateCount(int(draws[0, 0]), int(draws[0, 1]))
    return draws


def simulate_paths(process, grid, rng, size):
    """Vectorized path simulation.

    Returns:
        (clock, counts): arrays of shape (size, m + 1) and (size, m + 1, 2)
    """
    model = as_model(process)
    clock = sample_path(model.subordinator, grid, rng, size=size)
    steps = np.diff(clock, axis=1)
    counts = np.zeros(clock.shape + (2,), dtype=np.int64)
    for column, rate in enumerate((model.lambda1, model.lambda2)):
        jumps = rng.poisson(np.minimum(rate * steps, _POISSON_MEAN_CAP))
        counts[:, 1:, column] = np.cumsum(jumps, axis=1)
    return clock, counts


def simulate_path(process, grid, rng):
    """One BTSFPP path on ``grid``: subordinator path, then conditionally independent Poisson increments."""
    clock, counts = simulate_paths(process, grid, rng, size=1)
    return CountPath(times=grid.times, clock=clock[0], counts=counts[0])
