"""Distribution models: log densities, sampling, Normal CDF/quantile, parsing."""

import math

import numpy as np
import pytest
from scipy import integrate, special, stats

from surprisal import (
    ArityError,
    Binomial,
    Gamma,
    IndependentProduct,
    Normal,
    StudentT,
    ValidationError,
    log_density,
    normal_cdf,
    normal_quantile,
    parse_model,
    sample,
)
from surprisal.distributions import log_density_array


class TestLogDensity:
    def test_normal_at_mode(self):
        # closed form: -log sqrt(2 pi)
        assert log_density(Normal(0, 1), 0.0) == pytest.approx(-0.5 * math.log(2 * math.pi), abs=1e-12)

    def test_normal_general(self):
        model = Normal(2.0, 3.0)
        y = 4.5
        expected = -0.5 * math.log(2 * math.pi) - math.log(3.0) - 0.5 * ((y - 2.0) / 3.0) ** 2
        assert log_density(model, y) == pytest.approx(expected, abs=1e-12)

    def test_gamma_example(self):
        # f(1) = rate^shape * e^-rate / Gamma(shape) = 4 e^-2
        assert log_density(Gamma(2, 2), 1.0) == pytest.approx(math.log(4.0) - 2.0, abs=1e-12)

    def test_student_t_example(self):
        # closed form via log-gamma: Gamma(2.5) / (sqrt(4 pi) Gamma(2))
        expected = (
            special.gammaln(2.5) - special.gammaln(2.0) - 0.5 * math.log(4.0 * math.pi)
        )
        assert log_density(StudentT(4), 0.0) == pytest.approx(expected, abs=1e-12)
        assert expected == pytest.approx(-0.980829, abs=1e-6)

    def test_product_rule(self):
        prod = IndependentProduct((Gamma(2, 2), Gamma(2, 2)))
        single = log_density(Gamma(2, 2), 1.0)
        assert log_density(prod, (1.0, 1.0)) == pytest.approx(2 * single, abs=1e-12)

    def test_zero_density_points(self):
        assert log_density(Gamma(2, 2), -1.0) == -np.inf
        assert log_density(Binomial(10, 0.5), 11) == -np.inf
        assert log_density(Binomial(10, 0.5), -1) == -np.inf

    def test_gamma_boundary_conventions(self):
        assert log_density(Gamma(1.0, 2.0), 0.0) == pytest.approx(math.log(2.0))
        assert log_density(Gamma(2.0, 2.0), 0.0) == -np.inf
        assert log_density(Gamma(0.5, 1.0), 0.0) == np.inf

    def test_binomial_matches_scipy(self):
        model = Binomial(265, 0.148)
        ks = np.array([0, 5, 39, 114, 265])
        ours = log_density_array(model, ks)
        ref = stats.binom.logpmf(ks, 265, 0.148)
        np.testing.assert_allclose(ours, ref, atol=1e-10)

    def test_arity_mismatch(self):
        with pytest.raises(ArityError):
            log_density(IndependentProduct((Normal(0, 1), Normal(0, 1))), 1.0)
        with pytest.raises(ArityError):
            log_density(Normal(0, 1), (1.0, 2.0))
        with pytest.raises(ArityError):
            log_density(Binomial(10, 0.5), 1.5)

    def test_invalid_parameters_rejected_at_construction(self):
        with pytest.raises(ValidationError):
            Normal(0, 0.0)
        with pytest.raises(ValidationError):
            StudentT(-1)
        with pytest.raises(ValidationError):
            Gamma(2, -2)
        with pytest.raises(ValidationError):
            Binomial(10, 1.5)
        with pytest.raises(ValidationError):
            Binomial(-1, 0.5)


class TestDensityNormalization:
    """exp(log_density) must integrate (or sum) to one."""

    @pytest.mark.parametrize(
        "model,lo,hi",
        [
            (Normal(0, 1), -40.0, 40.0),
            (Gamma(2, 2), 0.0, 60.0),
            (Gamma(0.5, 1.0), 0.0, 80.0),
            (StudentT(4), -np.inf, np.inf),
        ],
    )
    def test_continuous_quadrature(self, model, lo, hi):
        total, err = integrate.quad(
            lambda y: math.exp(log_density(model, y)), lo, hi, limit=200
        )
        assert total == pytest.approx(1.0, abs=1e-6)

    def test_binomial_pmf_sums_to_one(self):
        model = Binomial(265, 0.148)
        support = np.arange(266)
        assert np.exp(log_density_array(model, support)).sum() == pytest.approx(1.0, abs=1e-12)


class TestSampling:
    def test_normal_mean_clt(self):
        draws = sample(Normal(0, 1), 100_000, 2024)
        # 3 sigma / sqrt(n) is ~0.0095; the spec doubles it
        assert abs(draws.mean()) < 0.02

    def test_degenerate_binomial(self):
        assert np.array_equal(sample(Binomial(0, 0.7), 7, 1), np.zeros(7))

    def test_seed_determinism(self):
        a = sample(Gamma(2, 2), 500, 99)
        b = sample(Gamma(2, 2), 500, 99)
        assert np.array_equal(a, b)

    def test_product_shape_and_determinism(self):
        model = IndependentProduct((Gamma(2, 2), Normal(0, 1)))
        a = sample(model, 50, 5)
        assert a.shape == (50, 2)
        assert np.array_equal(a, sample(model, 50, 5))

    def test_invalid_n(self):
        with pytest.raises(ValidationError):
            sample(Normal(0, 1), 0, 1)

    @pytest.mark.parametrize(
        "model,cdf",
        [
            (Normal(0, 1), lambda x: stats.norm.cdf(x)),
            (Gamma(2, 2), lambda x: stats.gamma.cdf(x, a=2, scale=0.5)),
            (StudentT(4), lambda x: stats.t.cdf(x, df=4)),
        ],
    )
    def test_sampling_consistency_ks(self, model, cdf):
        n = 100_000
        draws = np.sort(sample(model, n, 31415))
        grid = np.arange(1, n + 1) / n
        ref = cdf(draws)
        ks = max(np.max(grid - ref), np.max(ref - (grid - 1.0 / n)))
        critical = stats.kstwobign.isf(0.001) / math.sqrt(n)
        assert ks < critical

    def test_binomial_sampling_consistency(self):
        model = Binomial(20, 0.3)
        n = 100_000
        draws = sample(model, n, 8)
        support = np.arange(21)
        ecdf = np.searchsorted(np.sort(draws), support, side="right") / n
        ref = stats.binom.cdf(support, 20, 0.3)
        # DKW-style bound is conservative for discrete CDFs
        critical = stats.kstwobign.isf(0.001) / math.sqrt(n)
        assert np.max(np.abs(ecdf - ref)) < critical


class TestNormalCdfQuantile:
    def test_cdf_at_zero(self):
        assert normal_cdf(0.0) == pytest.approx(0.5, abs=1e-15)

    def test_quantile_075(self):
        # 30-digit reference value computed with mpmath erfinv
        assert normal_quantile(0.75) == pytest.approx(0.674489750196081743, abs=1e-12)

    def test_two_sided_five_percent(self):
        assert 2 * (1 - normal_cdf(1.959964)) == pytest.approx(0.05, abs=1e-6)

    def test_roundtrip_accuracy(self):
        p = np.concatenate(
            [
                np.array([1e-8, 1e-6, 1e-4]),
                np.linspace(0.01, 0.99, 99),
                1 - np.array([1e-8, 1e-6, 1e-4]),
            ]
        )
        err = np.abs(normal_cdf(normal_quantile(p)) - p)
        assert np.max(err) <= 1e-10

    def test_quantile_domain(self):
        for bad in (0.0, 1.0, -0.5, 2.0):
            with pytest.raises(ValidationError):
                normal_quantile(bad)


class TestParseModel:
    def test_keyword_form(self):
        assert parse_model("normal(mu=0,sigma=1)") == Normal(0.0, 1.0)
        assert parse_model("gamma(shape=2,rate=2)") == Gamma(2.0, 2.0)
        assert parse_model("binomial(trials=265,prob=0.148)") == Binomial(265, 0.148)

    def test_t_defaults(self):
        assert parse_model("t(nu=4)") == StudentT(4.0, 0.0, 1.0)
        assert parse_model("t(4, 1, 2)") == StudentT(4.0, 1.0, 2.0)

    def test_positional_product(self):
        model = parse_model("product(gamma(2,2),gamma(2,2))")
        assert isinstance(model, IndependentProduct)
        assert model.components == (Gamma(2.0, 2.0), Gamma(2.0, 2.0))

    def test_whitespace_and_case(self):
        assert parse_model(" Normal( mu = 0.5 , sigma = 2 ) ") == Normal(0.5, 2.0)

    def test_roundtrip_through_describe(self):
        for text in (
            "normal(mu=0,sigma=1)",
            "t(nu=4)",
            "gamma(shape=2,rate=2)",
            "product(gamma(2,2),normal(0,1))",
            "binomial(trials=10,prob=0.5)",
        ):
            model = parse_model(text)
            assert parse_model(model.describe()) == model

    @pytest.mark.parametrize(
        "bad",
        [
            "nope(1,2)",
            "normal(mu=0)",
            "normal(mu=0,sigma=1) trailing",
            "normal(mu=0,sigma=1,extra=2)",
            "product(1,2)",
            "gamma(shape=2,rate=-2)",
            "normal(0,1",
        ],
    )
    def test_bad_specs(self, bad):
        with pytest.raises(ValidationError):
            parse_model(bad)
