"""
Lévy subordinators: Laplace exponents, Lévy densities and increment sampling.

This module contains:
- The SubordinatorSpec base class and its variants (tempered stable, stable, gamma,
  deterministic drift)
- The jump-size masses a subordinator induces on a Poisson count run on its clock
- PathGrid and path sampling from independent increments
"""

import logging
import math
from abc import ABCMeta, abstractmethod
from dataclasses import asdict, dataclass

import numpy as np
from scipy import integrate, special

from . import config
from .errors import DomainError, ParameterError, QuadratureError, UnsupportedError

logger = logging.getLogger(__name__)


def _check_nonnegative(u, name="u"):
    """Return u as float or ndarray, rejecting negative entries."""
    arr = np.asarray(u, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr < 0):
        raise DomainError(f"{name} must be >= 0, got {u}")
    return float(arr) if arr.ndim == 0 else arr


def _check_positive(s, name="s"):
    """Return s as float or ndarray, rejecting entries <= 0."""
    arr = np.asarray(s, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr <= 0):
        raise DomainError(f"{name} must be > 0, got {s}")
    return float(arr) if arr.ndim == 0 else arr


def positive_stable(alpha, dt, rng, size):
    """Draw positive alpha-stable variables with Laplace transform exp(-dt u^alpha).

    Uses Kanter's representation X = (A(U)/E)^((1-alpha)/alpha) with U uniform on
    (0, pi] and E standard exponential.
    """
    u = np.pi * (1.0 - rng.random(size))
    e = rng.standard_exponential(size)
    a = (
        np.sin(alpha * u) ** (alpha / (1.0 - alpha))
        * np.sin((1.0 - alpha) * u)
        / np.sin(u) ** (1.0 / (1.0 - alpha))
    )
    return dt ** (1.0 / alpha) * (a / e) ** ((1.0 - alpha) / alpha)


class SubordinatorSpec(metaclass=ABCMeta):
    """Base class for Lévy subordinators {S(t): t >= 0} given by E[exp(-u S(t))] = exp(-t psi(u))."""

    name = "subordinator"

    @abstractmethod
    def _psi(self, u):
        """Laplace exponent on validated input."""

    @abstractmethod
    def _psi_derivative(self, u):
        """First derivative of the Laplace exponent on validated input."""

    @abstractmethod
    def _sample(self, dt, rng, count):
        """Return ``count`` independent draws of S(dt) as a 1-D array."""

    def laplace_exponent(self, u):
        """Laplace exponent psi(u) for u >= 0 (scalar or array); psi(0) = 0."""
        return self._psi(_check_nonnegative(u))

    def laplace_exponent_derivative(self, u):
        """First derivative psi'(u) for u >= 0."""
        return self._psi_derivative(_check_nonnegative(u))

    def levy_density(self, s):
        """Density of the Lévy measure at s > 0."""
        raise UnsupportedError(f"{self.name} subordinator has no Lévy density")

    def sample_increment(self, dt, rng, size=None):
        """Draw S(dt) using the generator ``rng``.

        Args:
            dt: Positive time increment
            rng: numpy Generator; all draws are a deterministic function of its state
            size: None for one float, or an int/tuple for an array of draws

        Returns:
            float or ndarray
        """
        if not dt > 0:
            raise DomainError(f"dt must be > 0, got {dt}")
        count = 1 if size is None else int(np.prod(size))
        draws = self._sample(float(dt), rng, count)
        return float(draws[0]) if size is None else draws.reshape(size)

    def count_jump_masses(self, rate, n):
        """Jump-size masses of a rate-``rate`` Poisson count run on this clock.

        Entry j-1 is m_j = integral (rate s)^j exp(-rate s) / j! nu(ds), the rate of
        jumps of size j. The masses sum to psi(rate). The built-in variants override
        this with closed forms. A user-defined clock only has to supply its Laplace
        exponent, a sampler and ``levy_density``; the masses then come from this
        quadrature, which is what lets the recursion, reliability and failure-law
        routes run on it.

        Args:
            rate: Poisson rate (> 0)
            n: Number of jump sizes to return

        Returns:
            ndarray of shape (n,)
        """
        rate = _check_positive(rate, "rate")
        masses = np.empty(n)
        for j in range(1, n + 1):
            log_norm = j * math.log(rate) - special.gammaln(j + 1)

            def integrand(s, j=j, log_norm=log_norm):
                return math.exp(log_norm + j * math.log(s) - rate * s) * self.levy_density(s)

            value, abserr = integrate.quad(integrand, 0.0, math.inf, limit=config.QUAD_LIMIT)
            if abserr > 1e-6 * max(value, 1e-300) and abserr > config.QUAD_EPSABS:
                raise QuadratureError(f"jump mass m_{j} did not converge", estimate=value, abserr=abserr)
            masses[j - 1] = value
        return masses

    def to_dict(self):
        """Serializable description: variant name plus parameters."""
        return {"name": self.name, **asdict(self)}

    def spec_string(self):
        """Compact ``name:key=value,...`` form accepted by the command line."""
        params = ",".join(f"{key}={value!r}" for key, value in asdict(self).items())
        return f"{self.name}:{params}" if params else self.name


def _tempered_masses(alpha, theta, rate, n):
    """Closed-form jump masses for the tempered (theta > 0) or plain (theta = 0) stable clock."""
    j = np.arange(1, n + 1, dtype=float)
    log_masses = (
        j * math.log(rate)
        - special.gammaln(j + 1.0)
        + math.log(alpha)
        + special.gammaln(j - alpha)
        - special.gammaln(1.0 - alpha)
        + (alpha - j) * math.log(rate + theta)
    )
    return np.exp(log_masses)


@dataclass(frozen=True)
class TemperedStable(SubordinatorSpec):
    """Tempered alpha-stable subordinator, psi(u) = (u + theta)^alpha - theta^alpha.

    Attributes:
        alpha: Stability index in (0, 1)
        theta: Tempering parameter >= 0; theta = 0 is the plain stable subordinator
    """

    alpha: float
    theta: float = 0.0

    name = "tempered-stable"

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ParameterError(f"tempered-stable alpha must lie in (0, 1), got {self.alpha}")
        if not self.theta >= 0:
            raise ParameterError(f"tempered-stable theta must be >= 0, got {self.theta}")

    def _psi(self, u):
        return (u + self.theta) ** self.alpha - self.theta**self.alpha

    def _psi_derivative(self, u):
        with np.errstate(divide="ignore"):
            return self.alpha * np.power(u + self.theta, self.alpha - 1.0)

    def levy_density(self, s):
        """Lévy density alpha exp(-theta s) / (Gamma(1 - alpha) s^(alpha + 1))."""
        s = _check_positive(s)
        scale = special.gamma(1.0 - self.alpha) * s ** (self.alpha + 1.0)
        return self.alpha * np.exp(-self.theta * s) / scale

    def count_jump_masses(self, rate, n):
        """Closed-form jump masses of the count process.

        m_j = rate^j alpha Gamma(j - alpha) (rate + theta)^(alpha - j) / (j! Gamma(1 - alpha)).
        """
        return _tempered_masses(self.alpha, self.theta, _check_positive(rate, "rate"), n)

    def _sample(self, dt, rng, count):
        if self.theta == 0:
            return positive_stable(self.alpha, dt, rng, count)

        # Split the horizon until one rejection round accepts with probability >= the floor
        pieces = 1
        while math.exp(-(dt / pieces) * self.theta**self.alpha) < config.ACCEPTANCE_FLOOR:
            pieces *= 2
        if pieces > 1:
            logger.debug("Tempered-stable increment dt=%g split into %d pieces", dt, pieces)

        total = np.zeros(count)
        for _ in range(pieces):
            total += self._tilted(dt / pieces, rng, count)
        return total

    def _tilted(self, dt, rng, count):
        """Exponential tilting by rejection: keep a stable draw X with probability exp(-theta X)."""
        out = np.empty(count)
        pending = np.arange(count)
        while pending.size:
            x = positive_stable(self.alpha, dt, rng, pending.size)
            accept = rng.random(pending.size) < np.exp(-self.theta * x)
            out[pending[accept]] = x[accept]
            pending = pending[~accept]
        return out


@dataclass(frozen=True)
class Stable(SubordinatorSpec):
    """Positive alpha-stable subordinator, psi(u) = u^alpha."""

    alpha: float

    name = "stable"

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ParameterError(f"stable alpha must lie in (0, 1), got {self.alpha}")

    def _psi(self, u):
        return u**self.alpha

    def _psi_derivative(self, u):
        with np.errstate(divide="ignore"):
            return self.alpha * np.power(u, self.alpha - 1.0)

    def levy_density(self, s):
        """Lévy density alpha / (Gamma(1 - alpha) s^(alpha + 1))."""
        s = _check_positive(s)
        return self.alpha / (special.gamma(1.0 - self.alpha) * s ** (self.alpha + 1.0))

    def count_jump_masses(self, rate, n):
        """Closed form of the stable jump masses (the tempered form at theta = 0)."""
        return _tempered_masses(self.alpha, 0.0, _check_positive(rate, "rate"), n)

    def _sample(self, dt, rng, count):
        return positive_stable(self.alpha, dt, rng, count)


@dataclass(frozen=True)
class Gamma(SubordinatorSpec):
    """Gamma subordinator, psi(u) = shape log(1 + u / rate); S(t) ~ Gamma(shape t, rate)."""

    shape: float
    rate: float

    name = "gamma"

    def __post_init__(self):
        if not self.shape > 0 or not self.rate > 0:
            raise ParameterError(
                f"gamma subordinator needs shape > 0 and rate > 0, got {self.shape}, {self.rate}"
            )

    def _psi(self, u):
        return self.shape * np.log1p(u / self.rate)

    def _psi_derivative(self, u):
        return self.shape / (self.rate + u)

    def levy_density(self, s):
        """Lévy density shape exp(-rate s) / s."""
        s = _check_positive(s)
        return self.shape * np.exp(-self.rate * s) / s

    def count_jump_masses(self, rate, n):
        """Logarithmic-series masses m_j = (shape / j) (rate / (rate + b))^j."""
        rate = _check_positive(rate, "rate")
        j = np.arange(1, n + 1, dtype=float)
        return self.shape / j * np.exp(j * math.log(rate / (rate + self.rate)))

    def _sample(self, dt, rng, count):
        return rng.gamma(self.shape * dt, 1.0 / self.rate, count)


@dataclass(frozen=True)
class Deterministic(SubordinatorSpec):
    """Pure drift S(t) = drift * t, psi(u) = drift u."""

    drift: float = 1.0

    name = "deterministic"

    def __post_init__(self):
        if not self.drift > 0:
            raise ParameterError(f"deterministic drift must be > 0, got {self.drift}")

    def _psi(self, u):
        return self.drift * u

    def _psi_derivative(self, u):
        return self.drift + 0.0 * u

    def count_jump_masses(self, rate, n):
        """Only unit jumps, at rate drift * rate."""
        rate = _check_positive(rate, "rate")
        masses = np.zeros(n)
        if n:
            masses[0] = self.drift * rate
        return masses

    def _sample(self, dt, rng, count):
        return np.full(count, self.drift * dt)


SUBORDINATORS = {cls.name: cls for cls in (TemperedStable, Stable, Gamma, Deterministic)}


@dataclass(frozen=True)
class PathGrid:
    """Strictly increasing time points 0 = t_0 < t_1 < ... < t_m."""

    times: tuple

    def __post_init__(self):
        times = tuple(float(x) for x in np.ravel(self.times))
        object.__setattr__(self, "times", times)
        if len(times) < 2:
            raise ParameterError("a path grid needs at least two time points")
        if times[0] != 0.0:
            raise ParameterError(f"a path grid must start at 0, got {times[0]}")
        if not all(b > a for a, b in zip(times, times[1:])):
            raise ParameterError("path grid times must be strictly increasing")

    @classmethod
    def uniform(cls, horizon, steps):
        """Grid of ``steps`` equal steps on [0, horizon]."""
        if not horizon > 0 or steps < 1:
            raise ParameterError(f"need horizon > 0 and steps >= 1, got {horizon}, {steps}")
        return cls(tuple(np.linspace(0.0, horizon, steps + 1)))

    @property
    def array(self):
        """Grid points as a numpy array."""
        return np.asarray(self.times)

    @property
    def increments(self):
        """Step lengths t_i - t_(i-1)."""
        return np.diff(self.array)


def laplace_exponent(spec, u):
    """Laplace exponent of ``spec`` at u."""
    return spec.laplace_exponent(u)


def levy_density(spec, s):
    """Lévy density of ``spec`` at s."""
    return spec.levy_density(s)


def sample_increment(spec, dt, rng, size=None):
    """Draw S(dt) for ``spec``."""
    return spec.sample_increment(dt, rng, size=size)


def sample_path(spec, grid, rng, size=None):
    """Sample S on ``grid`` as cumulative sums of independent increments.

    Args:
        spec: SubordinatorSpec
        grid: PathGrid
        rng: numpy Generator
        size: None for one path, or a number of paths

    Returns:
        ndarray of shape (m + 1,) or (size, m + 1), starting at 0 and nondecreasing
    """
    paths = 1 if size is None else int(size)
    values = np.zeros((paths, len(grid.times)))
    for i, dt in enumerate(grid.increments, start=1):
        values[:, i] = values[:, i - 1] + spec.sample_increment(dt, rng, size=paths)
    return values[0] if size is None else values
