"""
Tests for the Lévy subordinators.

This module covers Laplace exponents, Lévy densities, jump masses of the induced
count process, increment sampling and path construction.
"""

import math
from dataclasses import dataclass

import numpy as np
import pytest
from scipy import integrate, special, stats
from tempered_shocks.errors import DomainError, ParameterError, UnsupportedError
from tempered_shocks.process import SubordinatedPoisson
from tempered_shocks.shock import Geometric, reliability, reliability_general_geometric
from tempered_shocks.subordinator import (
    SUBORDINATORS,
    Deterministic,
    Gamma,
    PathGrid,
    Stable,
    SubordinatorSpec,
    TemperedStable,
    laplace_exponent,
    levy_density,
    sample_increment,
    sample_path,
)


@pytest.fixture
def rng():
    """A seeded generator"""
    return np.random.default_rng(12345)


@dataclass(frozen=True)
class ExponentialJumps(SubordinatorSpec):
    """Compound Poisson clock: jumps of mean 1/beta arriving at rate ``intensity``"""

    intensity: float
    beta: float

    name = "exponential-jumps"

    def _psi(self, u):
        return self.intensity * u / (u + self.beta)

    def _psi_derivative(self, u):
        return self.intensity * self.beta / (u + self.beta) ** 2

    def _sample(self, dt, rng, count):
        return rng.gamma(rng.poisson(self.intensity * dt, count), 1.0 / self.beta)

    def levy_density(self, s):
        """intensity beta exp(-beta s)"""
        return self.intensity * self.beta * math.exp(-self.beta * s)


class TestLaplaceExponent:
    """Test cases for the Laplace exponents of every variant"""

    def test_vanishes_at_zero(self):
        """Test psi(0) = 0 for every variant"""
        for spec in (TemperedStable(0.7, 2.0), Stable(0.4), Gamma(2.0, 3.0), Deterministic(1.5)):
            assert laplace_exponent(spec, 0.0) == pytest.approx(0.0, abs=1e-15)

    def test_tempered_stable(self):
        """Test psi(u) = (u + theta)^alpha - theta^alpha"""
        spec = TemperedStable(0.7, 2.0)
        assert spec.laplace_exponent(1.5) == pytest.approx(3.5**0.7 - 2.0**0.7, rel=1e-14)

    def test_tempered_stable_at_zero_theta_is_stable(self):
        """Test that theta = 0 gives u^alpha"""
        tempered = TemperedStable(0.6, 0.0).laplace_exponent(2.0)
        assert tempered == pytest.approx(Stable(0.6).laplace_exponent(2.0))

    def test_gamma(self):
        """Test psi(u) = shape log(1 + u / rate)"""
        assert Gamma(2.0, 3.0).laplace_exponent(1.5) == pytest.approx(2.0 * math.log(1.5), rel=1e-14)

    def test_deterministic(self):
        """Test psi(u) = drift u"""
        assert Deterministic(1.5).laplace_exponent(2.0) == 3.0

    def test_array_input(self):
        """Test elementwise evaluation on arrays"""
        u = np.array([0.5, 1.0, 2.0])
        np.testing.assert_allclose(Stable(0.5).laplace_exponent(u), np.sqrt(u))

    @pytest.mark.parametrize("u", [-0.1, float("nan"), [1.0, -2.0]])
    def test_negative_argument(self, u):
        """Test that u < 0 is a domain error"""
        with pytest.raises(DomainError):
            TemperedStable(0.5, 1.0).laplace_exponent(u)

    def test_derivative_matches_finite_difference(self):
        """Test psi'(u) against a central difference for each variant"""
        for spec in (TemperedStable(0.7, 2.0), Stable(0.4), Gamma(2.0, 3.0), Deterministic(1.5)):
            u, step = 1.3, 1e-6
            slope = (spec.laplace_exponent(u + step) - spec.laplace_exponent(u - step)) / (2 * step)
            assert spec.laplace_exponent_derivative(u) == pytest.approx(slope, rel=1e-7)


class TestLevyDensity:
    """Test cases for Lévy densities"""

    @pytest.mark.parametrize("u", [0.5, 1.0, 2.0])
    def test_integrates_to_laplace_exponent(self, u):
        """Test integral (1 - exp(-u s)) nu(s) ds = psi(u) for the tempered-stable density"""
        spec = TemperedStable(0.5, 1.0)

        def integrand(s):
            return -math.expm1(-u * s) * spec.levy_density(s)

        head, _ = integrate.quad(integrand, 0.0, 1.0, limit=200)
        tail, _ = integrate.quad(integrand, 1.0, math.inf, limit=200)
        assert head + tail == pytest.approx(spec.laplace_exponent(u), abs=1e-6)

    def test_tempered_stable_formula(self):
        """Test TemperedStable(0.7, 2) at s = 0.3 against the formula written out"""
        alpha, theta, s = 0.7, 2.0, 0.3
        expected = alpha * math.exp(-theta * s) / (math.gamma(1 - alpha) * s ** (1 + alpha))
        assert levy_density(TemperedStable(alpha, theta), s) == pytest.approx(expected, rel=1e-12)

    def test_gamma_density(self):
        """Test shape exp(-rate s) / s"""
        assert Gamma(2.0, 3.0).levy_density(0.5) == pytest.approx(2.0 * math.exp(-1.5) / 0.5)

    def test_deterministic_has_no_density(self):
        """Test that a pure drift has no Lévy density"""
        with pytest.raises(UnsupportedError):
            Deterministic(1.0).levy_density(1.0)

    def test_nonpositive_argument(self):
        """Test that s <= 0 is rejected"""
        with pytest.raises(DomainError):
            Stable(0.5).levy_density(0.0)


class TestCountJumpMasses:
    """Test cases for the jump masses of a Poisson count on a subordinator clock"""

    def test_tempered_closed_form_matches_integration(self):
        """Test the closed form against the base-class quadrature"""
        spec = TemperedStable(0.6, 1.0)
        closed = spec.count_jump_masses(2.0, 6)
        integrated = SubordinatorSpec.count_jump_masses(spec, 2.0, 6)
        np.testing.assert_allclose(closed, integrated, rtol=1e-6)

    def test_gamma_closed_form_matches_integration(self):
        """Test the logarithmic-series masses against quadrature"""
        spec = Gamma(1.5, 2.0)
        np.testing.assert_allclose(
            spec.count_jump_masses(3.0, 5), SubordinatorSpec.count_jump_masses(spec, 3.0, 5), rtol=1e-6
        )

    @pytest.mark.parametrize(
        "spec,n",
        [(TemperedStable(0.5, 1.0), 2000), (TemperedStable(0.8, 3.0), 2000), (Gamma(2.0, 2.0), 400)],
    )
    def test_masses_sum_to_jump_rate(self, spec, n):
        """Test sum_j m_j = psi(rate)"""
        masses = spec.count_jump_masses(3.0, n)
        assert math.fsum(masses) == pytest.approx(spec.laplace_exponent(3.0), rel=1e-10)

    def test_stable_masses(self):
        """Test that the stable masses are the tempered ones at theta = 0"""
        np.testing.assert_allclose(
            Stable(0.4).count_jump_masses(2.0, 8), TemperedStable(0.4, 0.0).count_jump_masses(2.0, 8)
        )

    def test_deterministic_only_unit_jumps(self):
        """Test that a drift clock only produces jumps of size one"""
        np.testing.assert_array_equal(Deterministic(2.0).count_jump_masses(1.5, 4), [3.0, 0.0, 0.0, 0.0])

    def test_quadrature_fallback_for_new_clocks(self):
        """Test that a clock without closed-form masses integrates its Lévy density"""
        spec = ExponentialJumps(2.0, 1.5)
        j = np.arange(1, 9)
        expected = 2.0 * 1.5 * 3.0**j / 4.5 ** (j + 1)
        np.testing.assert_allclose(spec.count_jump_masses(3.0, 8), expected, rtol=1e-6)

    def test_new_clock_drives_the_count(self):
        """Test the reliability series on a user-defined clock against exp(-t psi(Lambda p))"""
        model = SubordinatedPoisson(ExponentialJumps(2.0, 1.5), 1.0, 2.0)
        expected = reliability_general_geometric(model.subordinator, 1.0, 2.0, 0.9, 1.0)
        assert reliability(model, Geometric(0.9), 1.0) == pytest.approx(expected, rel=1e-7)

    def test_invalid_rate(self):
        """Test that a nonpositive rate is rejected"""
        with pytest.raises(DomainError):
            Gamma(1.0, 1.0).count_jump_masses(0.0, 3)


class TestValidation:
    """Test cases for parameter validation and serialization"""

    @pytest.mark.parametrize(
        "factory",
        [
            lambda: TemperedStable(1.0, 1.0),
            lambda: TemperedStable(0.5, -1.0),
            lambda: Stable(0.0),
            lambda: Gamma(0.0, 1.0),
            lambda: Gamma(1.0, -2.0),
            lambda: Deterministic(0.0),
        ],
    )
    def test_invalid_parameters(self, factory):
        """Test that out-of-range parameters raise ParameterError"""
        with pytest.raises(ParameterError):
            factory()

    def test_registry(self):
        """Test that every variant is registered under its name"""
        assert set(SUBORDINATORS) == {"tempered-stable", "stable", "gamma", "deterministic"}

    def test_to_dict_and_spec_string(self):
        """Test the serializable forms"""
        spec = TemperedStable(0.7, 1.0)
        assert spec.to_dict() == {"name": "tempered-stable", "alpha": 0.7, "theta": 1.0}
        assert spec.spec_string() == "tempered-stable:alpha=0.7,theta=1.0"


class TestSampling:
    """Test cases for increment sampling"""

    def test_scalar_and_array_shapes(self, rng):
        """Test that size=None returns a float and size returns an array"""
        spec = TemperedStable(0.5, 1.0)
        assert isinstance(spec.sample_increment(0.5, rng), float)
        assert sample_increment(spec, 0.5, rng, size=(3, 4)).shape == (3, 4)

    def test_nonpositive_dt(self, rng):
        """Test that dt <= 0 is rejected"""
        with pytest.raises(DomainError):
            Gamma(1.0, 1.0).sample_increment(0.0, rng)

    def test_deterministic_is_exact(self, rng):
        """Test that a drift clock draws drift * dt"""
        np.testing.assert_array_equal(Deterministic(2.0).sample_increment(0.25, rng, size=5), np.full(5, 0.5))

    def test_reproducible(self):
        """Test that equal seeds give equal draws"""
        spec = TemperedStable(0.6, 2.0)
        first = spec.sample_increment(1.0, np.random.default_rng(7), size=100)
        second = spec.sample_increment(1.0, np.random.default_rng(7), size=100)
        np.testing.assert_array_equal(first, second)

    def test_draws_are_nonnegative(self, rng):
        """Test nonnegativity for every variant"""
        for spec in (TemperedStable(0.3, 0.5), Stable(0.8), Gamma(0.5, 1.0)):
            assert (spec.sample_increment(0.7, rng, size=1000) >= 0).all()

    @pytest.mark.parametrize("u", [0.5, 1.0, 2.0])
    def test_tempered_stable_laplace_transform(self, u):
        """Test that the mean of exp(-u S(0.2)) is within 4 standard errors of exp(-0.2 psi(u))"""
        spec = TemperedStable(0.5, 1.0)
        draws = spec.sample_increment(0.2, np.random.default_rng(2024), size=100_000)
        values = np.exp(-u * draws)
        stderr = values.std(ddof=1) / math.sqrt(values.size)
        expected = math.exp(-0.2 * ((u + 1.0) ** 0.5 - 1.0))
        assert abs(values.mean() - expected) <= 4 * stderr

    def test_long_horizon_is_split(self, caplog):
        """Test that a rejection round with low acceptance is split into pieces"""
        spec = TemperedStable(0.5, 4.0)
        with caplog.at_level("DEBUG", logger="tempered_shocks.subordinator"):
            draws = spec.sample_increment(5.0, np.random.default_rng(3), size=20_000)
        assert "split into" in caplog.text
        mean = spec.laplace_exponent_derivative(0.0) * 5.0
        assert draws.mean() == pytest.approx(mean, rel=0.05)

    def test_stable_tail_index(self):
        """Test that the upper-decile tail of Stable(0.6) decays like x^-0.6 (log-log slope within 10%)"""
        draws = np.sort(Stable(0.6).sample_increment(1.0, np.random.default_rng(99), size=100_000))
        n = draws.size
        index = np.arange(int(0.9 * n), n - 50)
        survival = (n - index) / n
        slope, _ = np.polyfit(np.log(draws[index]), np.log(survival), 1)
        assert slope == pytest.approx(-0.6, rel=0.1)

    def test_untempered_matches_stable(self):
        """Test that TemperedStable(alpha, 0) and Stable(alpha) draws agree in distribution (KS test)"""
        stable = Stable(0.6).sample_increment(1.0, np.random.default_rng(22), size=20_000)
        untempered = TemperedStable(0.6, 0.0).sample_increment(1.0, np.random.default_rng(21), size=20_000)
        assert stats.ks_2samp(untempered, stable).pvalue > 1e-3
        same_seed = TemperedStable(0.6, 0.0).sample_increment(1.0, np.random.default_rng(22), size=20_000)
        np.testing.assert_array_equal(same_seed, stable)

    def test_gamma_moments(self, rng):
        """Test the Gamma(shape t, rate) mean"""
        draws = Gamma(2.0, 4.0).sample_increment(3.0, rng, size=50_000)
        assert draws.mean() == pytest.approx(1.5, rel=0.02)


class TestPaths:
    """Test cases for PathGrid and sample_path"""

    def test_grid_validation(self):
        """Test start, ordering and length checks"""
        with pytest.raises(ParameterError):
            PathGrid((0.0,))
        with pytest.raises(ParameterError):
            PathGrid((0.5, 1.0))
        with pytest.raises(ParameterError):
            PathGrid((0.0, 1.0, 1.0))
        with pytest.raises(ParameterError):
            PathGrid.uniform(0.0, 3)

    def test_uniform_grid(self):
        """Test the equal-step grid"""
        grid = PathGrid.uniform(2.0, 4)
        np.testing.assert_allclose(grid.array, [0.0, 0.5, 1.0, 1.5, 2.0])
        np.testing.assert_allclose(grid.increments, np.full(4, 0.5))

    def test_paths_start_at_zero_and_increase(self, rng):
        """Test that sampled paths start at 0 and never decrease"""
        paths = sample_path(TemperedStable(0.7, 1.0), PathGrid.uniform(3.0, 12), rng, size=200)
        assert paths.shape == (200, 13)
        assert (paths[:, 0] == 0).all()
        assert (np.diff(paths, axis=1) >= 0).all()

    def test_single_path_shape(self, rng):
        """Test that size=None returns one path"""
        assert sample_path(Gamma(1.0, 1.0), PathGrid((0.0, 0.5, 2.0)), rng).shape == (3,)

    def test_refinement_consistency(self):
        """Test that S(1) from a 1-step and a 10-step grid agree in distribution (KS test)"""
        spec = TemperedStable(0.5, 1.0)
        coarse = sample_path(spec, PathGrid.uniform(1.0, 1), np.random.default_rng(11), size=20_000)[:, -1]
        fine = sample_path(spec, PathGrid.uniform(1.0, 10), np.random.default_rng(12), size=20_000)[:, -1]
        assert stats.ks_2samp(coarse, fine).pvalue > 1e-3

    def test_gamma_path_marginal(self):
        """Test that a Gamma path endpoint follows Gamma(shape t, rate)"""
        spec = Gamma(1.5, 2.0)
        end = sample_path(spec, PathGrid.uniform(2.0, 8), np.random.default_rng(5), size=20_000)[:, -1]
        cdf = stats.gamma(a=3.0, scale=0.5).cdf
        assert stats.kstest(end, cdf).pvalue > 1e-3
        assert special.gammainc(3.0, 2.0 * np.median(end)) == pytest.approx(0.5, abs=0.02)
