"""
Tests for the bivariate tempered space-fractional Poisson process.

This module covers the parameter and state types, the three pmf routes and their
agreement, the pgf and its governing equations, the Lévy measure of the count
process and the count/path simulators.
"""

import math

import numpy as np
import pytest
from scipy import integrate, stats
from tempered_shocks.errors import (
    DomainError,
    ParameterError,
    SeriesConvergenceError,
    TruncationError,
    UnsupportedError,
)
from tempered_shocks.process import (
    BivariateCount,
    CountPath,
    ProcessParams,
    SubordinatedPoisson,
    as_model,
    bivariate_poisson_pmf,
    btsfpp_pgf,
    btsfpp_pmf,
    btsfpp_pmf_derivative,
    btsfpp_pmf_recursion,
    btsfpp_pmf_wright,
    hoppe_derivative,
    hoppe_sum,
    levy_measure_mass,
    levy_measure_total,
    marginal_pmf,
    occupation_integrals,
    pgf_ode_residual,
    pmf_pde_residual,
    pmf_time_derivative,
    simulate_counts,
    simulate_path,
    simulate_paths,
    tail_index,
    total_count_pmf,
    tsfpp_pmf,
    wright_exponential_identity_residual,
)
from tempered_shocks.subordinator import Deterministic, Gamma, PathGrid, Stable, TemperedStable

ALPHAS = (0.3, 0.5, 0.7, 0.9)
THETAS = (0.0, 0.5, 2.0)
TIMES = (0.1, 1.0)


def poisson_product(lambda1, lambda2, k1, k2, t):
    """Independent Poisson pmf written out"""
    return (
        math.exp(-(lambda1 + lambda2) * t)
        * (lambda1 * t) ** k1
        * (lambda2 * t) ** k2
        / (math.factorial(k1) * math.factorial(k2))
    )


@pytest.fixture
def params():
    """A generic tempered process"""
    return ProcessParams(alpha=0.7, theta=0.5, lambda1=1.0, lambda2=2.0)


class TestTypes:
    """Test cases for ProcessParams, BivariateCount and SubordinatedPoisson"""

    @pytest.mark.parametrize(
        "alpha,theta,lambda1,lambda2",
        [
            (0.0, 1.0, 1.0, 1.0),
            (1.2, 1.0, 1.0, 1.0),
            (0.5, -0.1, 1.0, 1.0),
            (0.5, 1.0, 0.0, 1.0),
            (0.5, 1.0, 1.0, -2.0),
        ],
    )
    def test_invalid_params(self, alpha, theta, lambda1, lambda2):
        """Test that out-of-range parameters raise"""
        with pytest.raises(ParameterError):
            ProcessParams(alpha, theta, lambda1, lambda2)

    def test_total_rate_and_rates(self, params):
        """Test Lambda and the per-type rates"""
        assert params.total_rate == 3.0
        assert params.rate(1) == 1.0
        assert params.rate(2) == 2.0
        with pytest.raises(ParameterError):
            params.rate(3)

    def test_clock(self, params):
        """Test that alpha = 1 uses a unit drift and alpha < 1 a tempered-stable clock"""
        assert params.subordinator() == TemperedStable(0.7, 0.5)
        assert ProcessParams(1.0, 0.3, 1.0, 1.0).subordinator() == Deterministic(1.0)
        model = params.model()
        assert isinstance(model, SubordinatedPoisson)
        assert model.jump_rate() == pytest.approx(params.psi(3.0))
        assert as_model(model) is model

    def test_as_model_rejects_other_types(self):
        """Test that as_model only accepts the two process types"""
        with pytest.raises(ParameterError):
            as_model({"alpha": 0.5})

    def test_count_validation(self):
        """Test that counts are nonnegative integers"""
        with pytest.raises(ParameterError):
            BivariateCount(-1, 0)
        with pytest.raises(ParameterError):
            BivariateCount(1.5, 0)
        assert BivariateCount.coerce((2, 3)).total == 5

    def test_diagonal(self):
        """Test the lattice points with k1 + k2 = h"""
        expected = [BivariateCount(0, 2), BivariateCount(1, 1), BivariateCount(2, 0)]
        assert BivariateCount.diagonal(2) == expected

    def test_subordinated_poisson_validation(self):
        """Test that a SubordinatedPoisson needs a subordinator and positive rates"""
        with pytest.raises(ParameterError):
            SubordinatedPoisson("gamma", 1.0, 1.0)
        with pytest.raises(ParameterError):
            SubordinatedPoisson(Gamma(1.0, 1.0), 0.0, 1.0)

    def test_unit_jump_rate(self):
        """Test lambda_n psi'(Lambda)"""
        model = SubordinatedPoisson(Gamma(2.0, 1.0), 1.0, 3.0)
        assert model.unit_jump_rate(2) == pytest.approx(3.0 * 2.0 / 5.0)


class TestBivariatePoisson:
    """Test cases for the independent bivariate Poisson pmf"""

    def test_origin(self):
        """Test P(0, 0) = exp(-Lambda s)"""
        assert bivariate_poisson_pmf(1.0, 2.0, (0, 0), 0.7) == pytest.approx(math.exp(-2.1))

    def test_time_zero(self):
        """Test that nothing has happened at s = 0"""
        assert bivariate_poisson_pmf(1.0, 2.0, (1, 0), 0.0) == 0.0
        assert bivariate_poisson_pmf(1.0, 2.0, (0, 0), 0.0) == 1.0

    def test_direct_arithmetic(self):
        """Test (1, 2, (1, 1), 0.5) = 0.5 exp(-1.5)"""
        assert bivariate_poisson_pmf(1.0, 2.0, (1, 1), 0.5) == pytest.approx(0.5 * math.exp(-1.5), rel=1e-14)

    def test_negative_time(self):
        """Test that s < 0 is a domain error"""
        with pytest.raises(DomainError):
            bivariate_poisson_pmf(1.0, 1.0, (0, 0), -1.0)


class TestPmfRoutes:
    """Test cases for the Wright, derivative and recursion routes of the joint pmf"""

    def test_origin_is_pgf_at_zero(self, params):
        """Test P(0, 0) = exp(-t psi(Lambda)) by every route"""
        expected = math.exp(-0.8 * params.psi(params.total_rate))
        for route in ("wright", "resummed", "derivative", "recursion"):
            assert btsfpp_pmf(params, (0, 0), 0.8, route=route) == pytest.approx(expected, rel=1e-10)

    @pytest.mark.parametrize("k", [(0, 0), (2, 1), (0, 4), (3, 3)])
    def test_alpha_one_is_poisson_product(self, k):
        """Test that alpha = 1 reduces to independent Poisson counts"""
        p = ProcessParams(1.0, 0.5, 1.0, 2.0)
        expected = poisson_product(1.0, 2.0, *k, 0.8)
        assert btsfpp_pmf_wright(p, k, 0.8) == pytest.approx(expected, abs=1e-10)
        assert btsfpp_pmf_derivative(p, k, 0.8) == pytest.approx(expected, abs=1e-10)

    def test_alpha_one_large_theta(self):
        """Test the Poisson reduction of the derivative route at theta = 2, k = (2, 1), t = 0.5"""
        p = ProcessParams(1.0, 2.0, 1.0, 2.0)
        expected = poisson_product(1.0, 2.0, 2, 1, 0.5)
        assert btsfpp_pmf_derivative(p, (2, 1), 0.5) == pytest.approx(expected, abs=1e-10)

    def test_wright_equals_derivative_example(self, params):
        """Test the two routes at (alpha, theta) = (0.7, 0.5), k = (1, 1), t = 0.8"""
        assert btsfpp_pmf_wright(params, (1, 1), 0.8) == pytest.approx(
            btsfpp_pmf_derivative(params, (1, 1), 0.8), abs=1e-8
        )

    @pytest.mark.parametrize("alpha", ALPHAS)
    @pytest.mark.parametrize("theta", THETAS)
    @pytest.mark.parametrize("t", TIMES)
    def test_route_equivalence_grid(self, alpha, theta, t):
        """Test Wright series against the derivative route for every cell with h <= 10"""
        p = ProcessParams(alpha, theta, 1.0, 2.0)
        for h in range(11):
            for k in BivariateCount.diagonal(h):
                wright = btsfpp_pmf_wright(p, k, t)
                derivative = btsfpp_pmf_derivative(p, k, t)
                assert wright == pytest.approx(derivative, abs=1e-8), f"k={k}"

    @pytest.mark.parametrize("theta", [0.0, 0.5, 2.0])
    def test_recursion_matches_derivative(self, theta):
        """Test the power-series recursion against the derivative route"""
        p = ProcessParams(0.6, theta, 1.5, 0.5)
        for h in range(8):
            for k in BivariateCount.diagonal(h):
                assert btsfpp_pmf_recursion(p, k, 0.9) == pytest.approx(
                    btsfpp_pmf_derivative(p, k, 0.9), abs=1e-10
                )

    def test_marginal_consistency(self, params):
        """Test that diagonal sums of the joint pmf give the univariate total-count pmf"""
        for h in range(7):
            total = math.fsum(btsfpp_pmf_derivative(params, k, 0.8) for k in BivariateCount.diagonal(h))
            expected = tsfpp_pmf(params.total_rate, params.alpha, params.theta, h, 0.8)
            assert total == pytest.approx(expected, abs=1e-10)

    def test_resummed_matches_series(self, params):
        """Test the resummed Wright form against the tempering series when theta < Lambda"""
        for k in range(12):
            series = tsfpp_pmf(3.0, 0.7, 0.5, k, 1.2, form="series")
            resummed = tsfpp_pmf(3.0, 0.7, 0.5, k, 1.2, form="resummed")
            assert resummed == pytest.approx(series, abs=1e-11)

    def test_large_theta_needs_resummed_form(self):
        """Test that theta >= Lambda diverges in series form but not in resummed form"""
        p = ProcessParams(0.5, 5.0, 1.0, 2.0)
        with pytest.raises(SeriesConvergenceError):
            btsfpp_pmf_wright(p, (1, 1), 1.0)
        assert btsfpp_pmf(p, (1, 1), 1.0, route="resummed") == pytest.approx(
            btsfpp_pmf_recursion(p, (1, 1), 1.0), abs=1e-12
        )

    def test_auto_route_beyond_derivative_range(self, params):
        """Test that h > 10 goes through the resummed Wright form"""
        for k in [(6, 6), (0, 15), (20, 5)]:
            expected = btsfpp_pmf_recursion(params, k, 1.0)
            assert btsfpp_pmf(params, k, 1.0) == pytest.approx(expected, abs=1e-12)

    def test_unknown_route(self, params):
        """Test that an unknown route name is rejected"""
        with pytest.raises(ParameterError):
            btsfpp_pmf(params, (1, 0), 1.0, route="magic")

    @pytest.mark.parametrize("route", ["wright", "resummed", "derivative", "recursion"])
    def test_nonpositive_time(self, params, route):
        """Test that the series routes need t > 0"""
        with pytest.raises(DomainError):
            btsfpp_pmf(params, (1, 0), 0.0, route=route)

    def test_derivative_cap(self, params):
        """Test that h above the cap is unsupported and the cap can be raised"""
        with pytest.raises(UnsupportedError, match="--hoppe-cap"):
            btsfpp_pmf_derivative(params, (21, 20), 1.0)
        value = btsfpp_pmf_derivative(params, (21, 20), 1.0, cap=41)
        assert value == pytest.approx(btsfpp_pmf_recursion(params, (21, 20), 1.0), rel=1e-8)

    def test_extended_precision_hoppe(self):
        """Test that the mpmath Hoppe sum agrees with the float one"""
        fast = hoppe_sum(0.6, 1.0, 0.7, 3.0, 8, extended_precision=False)
        exact = hoppe_sum(0.6, 1.0, 0.7, 3.0, 8, extended_precision=True)
        assert fast == pytest.approx(exact, rel=1e-9)

    def test_hoppe_derivative_matches_finite_difference(self):
        """Test the first Hoppe derivative against a central difference"""
        alpha, theta, t, u, step = 0.6, 1.0, 0.7, 2.0, 1e-6

        def f(x):
            return math.exp(-t * ((x + theta) ** alpha - theta**alpha))

        slope = (f(u + step) - f(u - step)) / (2 * step)
        assert hoppe_derivative(alpha, theta, t, u, 1) == pytest.approx(slope, rel=1e-7)

    def test_space_fractional_limit(self):
        """Test theta = 0 against a bivariate process whose second rate vanishes"""
        p = ProcessParams(0.6, 0.0, 2.0, 1e-12)
        for k in range(6):
            assert btsfpp_pmf(p, (k, 0), 0.9) == pytest.approx(tsfpp_pmf(2.0, 0.6, 0.0, k, 0.9), abs=1e-8)

    def test_symmetry(self):
        """Test that swapping (lambda1, k1) with (lambda2, k2) leaves the pmf unchanged"""
        p = ProcessParams(0.55, 0.8, 0.7, 1.9)
        q = ProcessParams(0.55, 0.8, 1.9, 0.7)
        for k1, k2 in [(0, 3), (2, 1), (4, 4)]:
            assert btsfpp_pmf(p, (k1, k2), 1.1) == pytest.approx(btsfpp_pmf(q, (k2, k1), 1.1), rel=1e-12)

    def test_marginal_pmf(self, params):
        """Test that each component alone is a TSFPP with its own rate"""
        for k in range(5):
            joint = math.fsum(btsfpp_pmf_recursion(params, (k, j), 0.6) for j in range(200))
            assert marginal_pmf(params, 1, k, 0.6) == pytest.approx(joint, abs=1e-10)


class TestTotalCount:
    """Test cases for the total-count recursion, tail rule and occupation integrals"""

    @pytest.mark.parametrize("alpha", ALPHAS)
    @pytest.mark.parametrize("theta", [0.5, 2.0])
    @pytest.mark.parametrize("t", TIMES)
    def test_normalization(self, alpha, theta, t):
        """Test that the pmf up to the tail index carries mass >= 1 - 1e-6"""
        p = ProcessParams(alpha, theta, 1.0, 2.0)
        index = tail_index(p, t)
        pmf = total_count_pmf(p, t, index)
        assert math.fsum(pmf) >= 1.0 - 1e-6
        assert pmf[-1] < 1e-7

    def test_untempered_tail_is_too_heavy(self):
        """Test that the stable clock (theta = 0) hits the cap of the tail rule"""
        with pytest.raises(TruncationError) as excinfo:
            tail_index(ProcessParams(0.3, 0.0, 1.0, 2.0), 1.0)
        assert excinfo.value.remaining_mass > 1e-6
        assert excinfo.value.index == 5000

    def test_general_clocks(self):
        """Test the recursion on gamma and drift clocks against known laws"""
        drift = total_count_pmf(SubordinatedPoisson(Deterministic(1.0), 1.0, 2.0), 0.5, 6)
        expected = [math.exp(-1.5) * 1.5**n / math.factorial(n) for n in range(7)]
        np.testing.assert_allclose(drift, expected, rtol=1e-13)

        # Poisson on a gamma clock is negative binomial
        gamma = total_count_pmf(SubordinatedPoisson(Gamma(2.0, 1.0), 1.0, 2.0), 1.5, 6)
        r, q = 3.0, 1.0 / 4.0
        negative_binomial = [
            math.gamma(r + n) / (math.gamma(r) * math.factorial(n)) * q**r * (1 - q) ** n for n in range(7)
        ]
        np.testing.assert_allclose(gamma, negative_binomial, rtol=1e-12)

    def test_time_derivative(self, params):
        """Test d/dt P(Z(t) = h) against a central difference"""
        step = 1e-5
        upper = total_count_pmf(params, 1.0 + step, 5)
        lower = total_count_pmf(params, 1.0 - step, 5)
        expected = (upper - lower) / (2 * step)
        np.testing.assert_allclose(pmf_time_derivative(params, 1.0, 5), expected, atol=1e-8)

    def test_occupation_integrals(self, params):
        """Test the expected time at each level against quadrature of the pmf"""
        values = occupation_integrals(params, 3)
        for h in range(4):
            integral, _ = integrate.quad(
                lambda t, h=h: total_count_pmf(params, t, h)[h], 0.0, 200.0, limit=200
            )
            assert values[h] == pytest.approx(integral, rel=1e-7)

    def test_long_time_keeps_its_mass(self, params):
        """Test that P(Z = 0) is below the normal float range at t = 400 while the pmf sums to one"""
        pmf = total_count_pmf(params, 400.0, 3000)
        assert 0.0 <= pmf[0] < 1e-300
        assert np.all(np.isfinite(pmf))
        assert math.fsum(pmf) == pytest.approx(1.0, abs=1e-9)
        assert tail_index(params, 400.0) < 3000

    def test_poisson_at_high_rate(self):
        """Test the alpha = 1 recursion against Poisson(1000) when exp(-1000) underflows"""
        pmf = total_count_pmf(ProcessParams(1.0, 1.0, 100.0, 100.0), 5.0, 1400)
        expected = stats.poisson.pmf(np.arange(1401), 1000.0)
        np.testing.assert_allclose(pmf, expected, rtol=1e-9, atol=1e-300)

    def test_far_beyond_float_range(self, params):
        """Test that a pmf below the smallest float comes back as zeros"""
        np.testing.assert_array_equal(total_count_pmf(params, 1e6, 3), np.zeros(4))

    def test_time_zero(self, params):
        """Test that Z(0) = 0"""
        np.testing.assert_array_equal(total_count_pmf(params, 0.0, 3), [1.0, 0.0, 0.0, 0.0])


class TestPgf:
    """Test cases for the pgf and its governing equations"""

    def test_unit_point_and_time_zero(self, params):
        """Test G(1, 1; t) = 1 and G(u; 0) = 1"""
        assert btsfpp_pgf(params, 1.0, 1.0, 2.0) == 1.0
        assert btsfpp_pgf(params, 0.3, 0.6, 0.0) == 1.0

    def test_space_fractional_pgf(self):
        """Test the theta = 0 pgf"""
        p = ProcessParams(0.6, 0.0, 1.0, 2.0)
        expected = math.exp(-1.3 * (1.0 * 0.5 + 2.0 * 0.8) ** 0.6)
        assert btsfpp_pgf(p, 0.5, 0.2, 1.3) == pytest.approx(expected, rel=1e-14)

    def test_domain(self, params):
        """Test that u outside [0, 1] and t < 0 are rejected"""
        with pytest.raises(DomainError):
            btsfpp_pgf(params, 1.2, 0.5, 1.0)
        with pytest.raises(DomainError):
            btsfpp_pgf(params, 0.5, 0.5, -1.0)

    def test_pgf_pmf_duality(self):
        """Test sum_h 0.5^h P(Z(t) = h) against G(0.5, 0.5; t)"""
        p = ProcessParams(0.7, 1.0, 1.0, 2.0)
        pmf = total_count_pmf(p, 1.0, 200)
        series = math.fsum(0.5**h * pmf[h] for h in range(201))
        assert series == pytest.approx(btsfpp_pgf(p, 0.5, 0.5, 1.0), abs=1e-10)

    def test_ode_residual_at_unit_point(self, params):
        """Test that the residual vanishes identically at (1, 1)"""
        assert pgf_ode_residual(params, 1.0, 1.0, 1.0) == 0.0

    @pytest.mark.parametrize("alpha", ALPHAS)
    @pytest.mark.parametrize("theta", THETAS)
    @pytest.mark.parametrize("t", TIMES)
    def test_ode_residual_grid(self, alpha, theta, t):
        """Test the pgf differential equation by central differences"""
        p = ProcessParams(alpha, theta, 1.0, 2.0)
        assert pgf_ode_residual(p, 0.3, 0.6, t) < 1e-6

    def test_ode_residual_exponential_case(self):
        """Test the alpha = 1 residual"""
        assert pgf_ode_residual(ProcessParams(1.0, 0.5, 1.0, 2.0), 0.2, 0.7, 0.9) < 1e-8

    def test_ode_residual_needs_t_above_step(self, params):
        """Test the t > step precondition"""
        with pytest.raises(DomainError):
            pgf_ode_residual(params, 0.5, 0.5, 1e-6)

    def test_pde_residual_origin(self, params):
        """Test the shift-operator equation at k = (0, 0)"""
        assert pmf_pde_residual(params, (0, 0), 0.7) < 1e-6

    def test_pde_residual_poisson(self):
        """Test the classical Kolmogorov equation at alpha = 1"""
        p = ProcessParams(1.0, 0.5, 1.0, 2.0)
        for k in [(0, 0), (1, 2), (3, 1)]:
            assert pmf_pde_residual(p, k, 0.6) < 1e-8

    def test_pde_residual_example(self):
        """Test k = (1, 1), alpha = 0.6, theta = 1, t = 0.5"""
        assert pmf_pde_residual(ProcessParams(0.6, 1.0, 1.0, 2.0), (1, 1), 0.5) < 1e-5

    @pytest.mark.parametrize("alpha", ALPHAS)
    @pytest.mark.parametrize("theta", THETAS)
    @pytest.mark.parametrize("t", TIMES)
    def test_pde_residual_grid(self, alpha, theta, t):
        """Test the shift-operator equation for every cell with h <= 4"""
        p = ProcessParams(alpha, theta, 1.0, 2.0)
        for h in range(5):
            for k in BivariateCount.diagonal(h):
                assert pmf_pde_residual(p, k, t) < 1e-5, f"k={k}"


class TestLevyMeasure:
    """Test cases for the Lévy measure of the count process"""

    def test_unit_jump(self, params):
        """Test mass(1, 0) = lambda1 alpha (theta + Lambda)^(alpha - 1)"""
        expected = 1.0 * 0.7 * 3.5 ** (0.7 - 1.0)
        assert levy_measure_mass(params, (1, 0)) == pytest.approx(expected, rel=1e-14)

    def test_origin_has_no_mass(self, params):
        """Test that k = (0, 0) is a domain error"""
        with pytest.raises(DomainError):
            levy_measure_mass(params, (0, 0))

    @pytest.mark.parametrize("alpha", ALPHAS)
    @pytest.mark.parametrize("theta", [0.5, 2.0])
    def test_total_mass_is_jump_rate(self, alpha, theta):
        """Test sum over 1 <= h <= 150 of the masses against psi(Lambda)"""
        p = ProcessParams(alpha, theta, 1.0, 2.0)
        assert levy_measure_total(p, 150) == pytest.approx(p.psi(p.total_rate), abs=1e-6)

    def test_total_mass_by_quadrature(self):
        """Test integral (1 - exp(-Lambda s)) nu(ds) against the summed masses"""
        p = ProcessParams(0.6, 1.0, 1.0, 2.0)
        clock = p.subordinator()

        def integrand(s):
            return -math.expm1(-3.0 * s) * clock.levy_density(s)

        head, _ = integrate.quad(integrand, 0.0, 1.0, limit=200)
        tail, _ = integrate.quad(integrand, 1.0, math.inf, limit=200)
        assert head + tail == pytest.approx(levy_measure_total(p, 60), abs=1e-6)

    def test_printed_base_differs(self, params):
        """Test that the theta + h base does not reproduce psi(Lambda)"""
        printed = levy_measure_total(params, 60, printed_base=True)
        assert abs(printed - params.psi(params.total_rate)) > 1e-3

    def test_mass_ratio(self):
        """Test mass(1, 1)/mass(1, 0) = lambda2 (1 - alpha)/(theta + Lambda)"""
        p = ProcessParams(0.4, 50.0, 1.0, 2.0)
        ratio = levy_measure_mass(p, (1, 1)) / levy_measure_mass(p, (1, 0))
        assert ratio == pytest.approx(2.0 * 0.6 / 53.0, rel=1e-8)

    def test_alpha_one_has_only_unit_jumps(self):
        """Test that the Poisson case has no jumps of size two or more"""
        p = ProcessParams(1.0, 0.4, 1.0, 2.0)
        assert levy_measure_mass(p, (1, 0)) == pytest.approx(1.0)
        assert levy_measure_mass(p, (1, 1)) == 0.0


class TestWrightExponentialIdentity:
    """Test cases for the Wright/exponential identity residual"""

    def test_unit_argument(self, params):
        """Test u = 1 where both sides are one"""
        assert wright_exponential_identity_residual(params, 1.0, 0.7, form="resummed") < 1e-8

    def test_zero_argument(self, params):
        """Test u = 0 where both sides are exp(-t psi(Lambda))"""
        assert wright_exponential_identity_residual(params, 0.0, 0.7) < 1e-12

    def test_example(self):
        """Test u = 0.4, alpha = 0.5, theta = 1, Lambda = 2, t = 0.7"""
        p = ProcessParams(0.5, 1.0, 1.0, 1.0)
        assert wright_exponential_identity_residual(p, 0.4, 0.7) < 1e-8


class TestSimulation:
    """Test cases for count and path simulation"""

    def test_single_draw(self, params):
        """Test that size=None returns a BivariateCount"""
        draw = simulate_counts(params, 1.0, np.random.default_rng(1))
        assert isinstance(draw, BivariateCount)

    def test_poisson_case_is_exact(self):
        """Test that alpha = 1 samples independent Poisson counts"""
        p = ProcessParams(1.0, 0.0, 1.5, 0.5)
        draws = simulate_counts(p, 2.0, np.random.default_rng(4), size=50_000)
        np.testing.assert_allclose(draws.mean(axis=0), [3.0, 1.0], rtol=0.02)
        assert abs(np.corrcoef(draws.T)[0, 1]) < 0.02

    def test_empirical_pmf(self, params):
        """Test cell frequencies for h <= 4 within 4 standard errors of the Wright pmf"""
        n = 100_000
        draws = simulate_counts(params, 1.0, np.random.default_rng(2024), size=n)
        for h in range(5):
            for k in BivariateCount.diagonal(h):
                expected = btsfpp_pmf_wright(params, k, 1.0)
                frequency = np.count_nonzero((draws[:, 0] == k.k1) & (draws[:, 1] == k.k2)) / n
                assert abs(frequency - expected) <= 4 * math.sqrt(expected * (1 - expected) / n), f"k={k}"

    def test_empirical_pgf(self, params):
        """Test the sample mean of 0.5^(N1 + N2) within 4 standard errors of the pgf"""
        draws = simulate_counts(params, 1.0, np.random.default_rng(77), size=100_000)
        values = 0.5 ** draws.sum(axis=1)
        stderr = values.std(ddof=1) / math.sqrt(values.size)
        assert abs(values.mean() - btsfpp_pgf(params, 0.5, 0.5, 1.0)) <= 4 * stderr

    def test_general_clock(self):
        """Test simulation on a gamma clock against the negative binomial mean"""
        model = SubordinatedPoisson(Gamma(2.0, 1.0), 1.0, 2.0)
        draws = simulate_counts(model, 1.5, np.random.default_rng(8), size=40_000)
        assert draws.sum(axis=1).mean() == pytest.approx(3.0 * 3.0, rel=0.03)

    def test_nonpositive_time(self, params):
        """Test that t <= 0 is rejected"""
        with pytest.raises(DomainError):
            simulate_counts(params, 0.0, np.random.default_rng(0))

    def test_path_counts_nondecreasing(self, params):
        """Test the construction of a CountPath"""
        path = simulate_path(params, PathGrid.uniform(4.0, 40), np.random.default_rng(3))
        assert isinstance(path, CountPath)
        assert path.counts.shape == (41, 2)
        assert (np.diff(path.counts, axis=0) >= 0).all()
        assert (np.diff(path.clock) >= 0).all()
        assert path.totals[0] == 0
        for time, (j1, j2) in path.events():
            assert time in path.times
            assert j1 + j2 > 0

    def test_one_step_path_is_a_count_draw(self, params):
        """Test that a two-point grid reproduces simulate_counts with the same seed"""
        path = simulate_path(params, PathGrid((0.0, 1.3)), np.random.default_rng(21))
        draw = simulate_counts(params, 1.3, np.random.default_rng(21))
        assert tuple(path.counts[-1]) == (draw.k1, draw.k2)

    def test_independent_increments(self, params):
        """Test that successive increments are uncorrelated within 4 standard errors"""
        n = 40_000
        _, counts = simulate_paths(params, PathGrid((0.0, 0.5, 1.0)), np.random.default_rng(6), n)
        totals = counts.sum(axis=2)
        first, second = totals[:, 1] - totals[:, 0], totals[:, 2] - totals[:, 1]
        correlation = np.corrcoef(first, second)[0, 1]
        assert abs(correlation) <= 4 / math.sqrt(n)

    def test_stable_clock_paths(self):
        """Test that an untempered clock still produces valid paths"""
        model = SubordinatedPoisson(Stable(0.5), 1.0, 1.0)
        clock, counts = simulate_paths(model, PathGrid.uniform(1.0, 5), np.random.default_rng(2), 100)
        assert clock.shape == (100, 6)
        assert (np.diff(counts, axis=1) >= 0).all()
