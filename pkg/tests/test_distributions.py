import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose
from scipy import optimize, stats

import oracles
import reference_values as ref
from mjfskew import distributions as d
from mjfskew.distributions import MJF1Params, StudentTParams
from mjfskew.errors import DomainError

P1 = ref.params(1)
P10 = ref.params(10)
SYM = MJF1Params(7e-5, 7e-5, 1.3e-4, 2e-4, 3)

params_strategy = st.builds(
    MJF1Params,
    st.floats(1e-6, 1e-3),
    st.floats(1e-6, 1e-3),
    st.floats(1e-5, 1e-3),
    st.floats(-0.01, 0.01),
    st.integers(1, 20),
)


class TestParams:
    @pytest.mark.parametrize("field", ["alpha_g", "alpha_l", "theta"])
    @pytest.mark.parametrize("bad", [0.0, -1e-4, np.inf, np.nan])
    def test_positive_scales_required(self, field, bad):
        kw = dict(alpha_g=1e-4, alpha_l=1e-4, theta=1e-4)
        kw[field] = bad
        with pytest.raises(DomainError):
            MJF1Params(**kw)

    @pytest.mark.parametrize("tau", [0, -1, 1.5])
    def test_horizon_is_positive_integer(self, tau):
        with pytest.raises(DomainError):
            MJF1Params(1e-4, 1e-4, 1e-4, 0.0, tau)

    def test_derived_quantities(self):
        assert_allclose(P1.alpha, 7.17e-5, rtol=1e-12)
        assert_allclose(P1.delta, 1.50e-5, rtol=1e-12)
        assert P1.beta_shapes() == (P1.shape_l + 1, P1.shape_g + 1)


class TestChangeOfVariable:
    def test_centre_limit_and_unit_distance(self):
        assert d.mjf1_u(P1, P1.mu) == 0.0
        assert d.mjf1_u(P1, 1e6) == pytest.approx(1.0, abs=1e-12)
        assert_allclose(d.mjf1_u(P1, P1.mu + P1.scale), 1 / math.sqrt(2), rtol=1e-15)

    @given(params_strategy, st.floats(-0.999999, 0.999999))
    def test_inverse_round_trip(self, p, u):
        assert_allclose(d.mjf1_u(p, d.mjf1_u_inverse(p, u)), u, atol=1e-12)

    def test_strictly_increasing(self):
        x = np.linspace(-0.2, 0.2, 2001)
        assert np.all(np.diff(d.mjf1_u(P1, x)) > 0)


class TestDensity:
    def test_norm_const_matches_student_t_prefactor(self):
        t = StudentTParams(SYM.alpha_g, SYM.theta, SYM.tau, SYM.mu)
        assert_allclose(d.mjf1_norm_const(SYM), d.student_t_pdf(t, SYM.mu), rtol=1e-13)

    def test_norm_const_scales_with_horizon(self):
        p2 = P1.replace(tau=2)
        assert_allclose(d.mjf1_norm_const(p2), d.mjf1_norm_const(P1) / math.sqrt(2), rtol=1e-14)

    @pytest.mark.parametrize("tau", ref.TAUS)
    def test_integrates_to_one(self, tau):
        assert abs(float(oracles.integral(ref.params(tau))) - 1.0) < 1e-8

    def test_matches_high_precision_formula(self):
        f = oracles.density(P1)
        xs = np.concatenate([np.linspace(-0.1, 0.1, 41), [-3.0, 5.0, 1e3]])
        expected = np.array([float(f(x)) for x in xs])
        assert_allclose(d.mjf1_pdf(P1, xs), expected, rtol=1e-12)

    def test_symmetric_case_is_even(self):
        y = np.linspace(0, 0.3, 301)
        assert_allclose(d.mjf1_pdf(SYM, SYM.mu + y), d.mjf1_pdf(SYM, SYM.mu - y), rtol=1e-13)

    @pytest.mark.parametrize("side, sign", [("gains", 1.0), ("losses", -1.0)])
    def test_power_law_tails(self, side, sign):
        x1, x2 = 1e6, 1e8
        lf = d.mjf1_logpdf(P1, sign * np.array([x1, x2]))
        slope = (lf[1] - lf[0]) / math.log(x2 / x1)
        assert_allclose(-slope, d.tail_exponent(P1, side) + 1.0, rtol=1e-6)

    def test_logpdf_finite_far_out(self):
        assert np.isfinite(d.mjf1_logpdf(P1, np.array([-1e200, 1e200]))).all()

    @given(params_strategy, st.floats(-1.0, 1.0))
    def test_non_negative(self, p, x):
        assert d.mjf1_pdf(p, x) >= 0.0


class TestCDF:
    def test_limits(self):
        assert d.mjf1_cdf_gains(P1, -1e300) == pytest.approx(0.0, abs=1e-300)
        assert d.mjf1_cdf_gains(P1, 1e300) == 1.0
        assert d.mjf1_cdf_losses(P1, -1e300) == 1.0

    def test_symmetric_centre(self):
        assert_allclose(d.mjf1_cdf_gains(SYM, SYM.mu), 0.5, atol=1e-15)
        assert_allclose(d.mjf1_cdf_losses(SYM, SYM.mu), 0.5, atol=1e-15)

    def test_gains_against_quadrature(self):
        for x in (P1.mu, P1.mu - 0.03, P1.mu + 0.01):
            assert abs(d.mjf1_cdf_gains(P1, x) - float(oracles.cdf(P1, x))) < 1e-8

    def test_losses_against_quadrature(self):
        x = P1.mu + 0.05
        assert abs(d.mjf1_cdf_losses(P1, x) - float(oracles.upper_tail(P1, x))) < 1e-8

    @given(params_strategy)
    @settings(max_examples=40)
    def test_complementary(self, p):
        xs = p.mu + p.scale * np.linspace(-100, 100, 1001)
        assert_allclose(d.mjf1_cdf_gains(p, xs) + d.mjf1_cdf_losses(p, xs), 1.0, atol=1e-12)

    @pytest.mark.parametrize("p", [P1, P10])
    def test_derivative_is_density(self, p):
        h = 1e-7 * math.sqrt(d.mjf1_variance(p))
        xs = p.mu + p.scale * np.linspace(-5, 5, 100)
        # difference whichever CDF is below one half, so rounding near 1 does not dominate
        lower = (d.mjf1_cdf_gains(p, xs + h) - d.mjf1_cdf_gains(p, xs - h)) / (2 * h)
        upper = (d.mjf1_cdf_losses(p, xs - h) - d.mjf1_cdf_losses(p, xs + h)) / (2 * h)
        fd = np.where(d.mjf1_cdf_gains(p, xs) < 0.5, lower, upper)
        assert_allclose(fd, d.mjf1_pdf(p, xs), rtol=1e-5)

    @given(params_strategy)
    @settings(max_examples=40)
    def test_monotone(self, p):
        xs = p.mu + p.scale * np.linspace(-50, 50, 401)
        assert np.all(np.diff(d.mjf1_cdf_gains(p, xs)) >= 0)
        assert np.all(np.diff(d.mjf1_cdf_losses(p, xs)) <= 0)

    def test_far_upper_tail_keeps_relative_precision(self):
        x = P1.mu + 1e4 * P1.scale
        assert_allclose(d.mjf1_cdf_losses(P1, x), float(oracles.upper_tail(P1, x)), rtol=1e-9)


class TestQuantile:
    def test_symmetric_median_is_location(self):
        assert_allclose(d.mjf1_quantile(SYM, 0.5), SYM.mu, atol=1e-15)

    def test_round_trip(self):
        p = np.round(np.arange(0.01, 1.0, 0.01), 2)
        assert_allclose(d.mjf1_cdf_gains(P1, d.mjf1_quantile(P1, p)), p, atol=1e-9)

    @given(params_strategy, st.floats(1e-10, 1 - 1e-10))
    @settings(max_examples=50)
    def test_round_trip_random(self, params, p):
        assert abs(d.mjf1_cdf_gains(params, d.mjf1_quantile(params, p)) - p) <= 1e-9

    def test_median_value(self):
        assert_allclose(d.mjf1_median(P1), ref.MEDIAN[0], rtol=0.02)

    @pytest.mark.parametrize("p", [0.0, 1.0, -0.5, np.nan])
    def test_domain(self, p):
        with pytest.raises(DomainError):
            d.mjf1_quantile(P1, p)


class TestSampler:
    def test_deterministic(self):
        a = d.mjf1_sample(P1, 1000, seed=42).values
        b = d.mjf1_sample(P1, 1000, seed=42).values
        assert np.array_equal(a, b)
        assert not np.array_equal(a, d.mjf1_sample(P1, 1000, seed=43).values)

    def test_returns_sample_at_horizon(self):
        s = d.mjf1_sample(P10, 10, seed=0)
        assert s.tau == 10 and len(s) == 10

    def test_kolmogorov_smirnov(self):
        n = 100_000
        x = d.mjf1_sample(P1, n, seed=7).values
        ks = stats.kstest(x, lambda v: d.mjf1_cdf_gains(P1, v)).statistic
        assert ks < 1.63 / math.sqrt(n)

    @pytest.mark.slow
    def test_moments_of_a_million_draws(self):
        n = 1_000_000
        x = d.mjf1_sample(P1, n, seed=11).values
        m1, m2 = d.mjf1_mean(P1), d.mjf1_variance(P1)
        assert abs(x.mean() - m1) < 3 * math.sqrt(m2 / n)
        dev2 = (x - x.mean()) ** 2
        assert abs(dev2.mean() - m2) < 4 * dev2.std() / math.sqrt(n)

    def test_invalid_size(self):
        with pytest.raises(DomainError):
            d.mjf1_sample(P1, 0, seed=0)


class TestMoments:
    @pytest.mark.parametrize("tau", ref.TAUS)
    def test_mean_against_quadrature(self, tau):
        p = ref.params(tau)
        assert_allclose(d.mjf1_mean(p), float(oracles.mean(p)), rtol=1e-8)

    @pytest.mark.parametrize("tau", ref.TAUS)
    def test_variance_against_quadrature(self, tau):
        p = ref.params(tau)
        assert_allclose(d.mjf1_variance(p), float(oracles.variance(p)), rtol=1e-6)

    def test_legacy_variance_form_is_off(self):
        # the form with B(g, 1/2) B(l, 1/2) in the correction misses by a few tenths of a percent
        for tau in (1, 10):
            p = ref.params(tau)
            rel = abs(d.mjf1_variance_legacy(p) / float(oracles.variance(p)) - 1)
            assert 1e-3 < rel < 2e-2

    def test_mean_values(self):
        assert_allclose(d.mjf1_mean(P1), ref.M1[0], rtol=0.01)
        assert_allclose(d.mjf1_mean(P10), ref.M1[9], rtol=0.01)

    def test_mean_terms(self):
        mu_term, skew = d.mjf1_mean_terms(P1)
        assert mu_term == P1.mu
        assert_allclose(skew, -8.0e-4, rtol=0.01)
        assert_allclose(mu_term + skew, d.mjf1_mean(P1), rtol=1e-15)

    def test_variance_values(self):
        assert_allclose(d.mjf1_variance(P1), ref.M2[0], rtol=0.02)
        assert_allclose(d.mjf1_variance(ref.params(5)), ref.M2[4], rtol=0.02)

    def test_symmetric_reductions(self):
        assert d.mjf1_mean(SYM) == SYM.mu
        assert d.mjf1_variance(SYM) == SYM.theta * SYM.tau
        assert d.mjf1_mode(SYM) == SYM.mu
        ratio, corr = d.mjf1_variance_approx(SYM)
        assert corr == 0.0 and ratio == 1.0

    @given(st.floats(1e-8, 1e-1), st.floats(1e-8, 1e-1), st.integers(1, 1000))
    def test_symmetric_variance_is_exact(self, alpha, theta, tau):
        assert d.mjf1_variance(MJF1Params(alpha, alpha, theta, 0.0, tau)) == theta * tau

    def test_variance_correction_values(self):
        assert abs(d.mjf1_variance_approx(P1)[1] - 0.022) <= 0.005
        assert abs(d.mjf1_variance_approx(P10)[1] - 0.095) <= 0.010

    def test_mode_values(self):
        assert_allclose(d.mjf1_mode(P1), ref.MODE[0], rtol=0.02)
        assert_allclose(d.mjf1_mode(P10), ref.MODE[9], rtol=0.02)

    @pytest.mark.parametrize("tau", ref.TAUS)
    def test_mode_is_density_maximum(self, tau):
        p = ref.params(tau)
        sd = math.sqrt(d.mjf1_variance(p))
        # golden-section search in standardised units, then a root of the
        # finite-difference slope to get below the sqrt(eps) flatness limit
        logf = lambda t: d.mjf1_logpdf(p, p.mu + t * p.scale)
        res = optimize.minimize_scalar(lambda t: -logf(t), bracket=(-1.0, 0.0, 1.0), method="golden")
        h = 1e-5
        slope = lambda t: (logf(t + h) - logf(t - h)) / (2 * h)
        t_star = optimize.brentq(slope, res.x - 1e-3, res.x + 1e-3, xtol=1e-15)
        assert abs(p.mu + t_star * p.scale - d.mjf1_mode(p)) < 1e-9 * sd

    def test_moment_summary(self):
        m = d.mjf1_moments(P1)
        assert_allclose([m.zeta1, m.zeta2], [ref.ZETA1[0], ref.ZETA2[0]], rtol=0.03)
        m10 = d.mjf1_moments(P10)
        assert_allclose([m10.zeta1, m10.zeta2], [ref.ZETA1[9], ref.ZETA2[9]], rtol=0.03)
        s = d.mjf1_moments(SYM)
        assert abs(s.zeta1) < 1e-12 and abs(s.zeta2) < 1e-10

    def test_pearson_definitions(self):
        z1, z2 = d.pearson_skewness(1.0, 4.0, 0.0, 0.5)
        assert z1 == 0.5 and z2 == 0.75
        with pytest.raises(DomainError):
            d.pearson_skewness(1.0, 0.0, 0.0, 0.0)


class TestStudentT:
    def test_equals_symmetric_mjf1(self):
        t = StudentTParams(9e-5, 1.4e-4, 4, -3e-4)
        xs = np.linspace(-0.2, 0.2, 1000)
        assert_allclose(d.student_t_pdf(t, xs), d.mjf1_pdf(t.as_mjf1(), xs), rtol=1e-12)

    def test_normalised_with_variance_theta_tau(self):
        t = StudentTParams(9e-5, 1.4e-4, 4, 0.0)
        p = t.as_mjf1()
        assert abs(float(oracles.integral(p)) - 1.0) < 1e-8
        assert_allclose(float(oracles.variance(p)), t.theta * t.tau, rtol=1e-6)


class TestTailExponent:
    def test_values(self):
        assert_allclose(d.tail_exponent(P1, "gains"), 2 * 7.92e-5 / 1.42e-4 + 2, rtol=1e-14)
        assert d.tail_exponent(P1, "gains") == pytest.approx(3.115, abs=1e-3)
        assert d.tail_exponent(P1, "losses") == pytest.approx(2.904, abs=1e-3)
        assert d.tail_exponent(SYM, "gains") == d.tail_exponent(SYM, "losses")

    def test_bad_side(self):
        with pytest.raises(DomainError):
            d.tail_exponent(P1, "up")
