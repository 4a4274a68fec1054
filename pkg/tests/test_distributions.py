"""
Tests for the distribution families: log-likelihoods, KLD, distances.
"""
import math

import numpy as np
import pytest
from scipy import integrate, stats

from models.instance import Family
from services import distributions
from services.errors import ParameterDomainError, SupportError, UsageError
from services.streams import make_stream

NORMAL = Family.NORMAL_UNIT_VARIANCE
EXPONENTIAL = Family.EXPONENTIAL_BY_MEAN
LN2 = math.log(2.0)


class TestLogLikelihood:
    def test_normal_at_mean(self):
        assert distributions.log_likelihood(NORMAL, [1.5], 1.5) == pytest.approx(-0.5 * math.log2(2 * math.pi))

    def test_exponential_closed_form(self):
        # mean 2: f(1) = 0.5 * exp(-0.5)
        expected = (math.log(0.5) - 0.5) / LN2
        assert distributions.log_likelihood(EXPONENTIAL, [2.0], 1.0) == pytest.approx(expected)

    def test_negative_exponential_sample(self):
        with pytest.raises(SupportError):
            distributions.log_likelihood(EXPONENTIAL, [1.0], -0.1)

    @pytest.mark.parametrize("family,theta", [
        (EXPONENTIAL, [0.0]),
        (EXPONENTIAL, [-1.0]),
        (NORMAL, [math.nan]),
        (NORMAL, [1.0, 2.0]),
    ])
    def test_invalid_theta(self, family, theta):
        with pytest.raises(ParameterDomainError):
            distributions.log_likelihood(family, theta, 0.5)

    @pytest.mark.parametrize("family", [NORMAL, EXPONENTIAL])
    def test_matrix_matches_scalar(self, family):
        rng = np.random.default_rng(3)
        thetas = np.array([0.4, 1.0, 2.5])
        xs = rng.exponential(1.0, size=20)
        matrix = distributions.log_likelihood_matrix(family, thetas, xs)
        assert matrix.shape == (20, 3)
        for t, x in enumerate(xs):
            for h, theta in enumerate(thetas):
                assert matrix[t, h] == pytest.approx(distributions.log_likelihood(family, [theta], x), abs=1e-10)

    @pytest.mark.parametrize("family", [NORMAL, EXPONENTIAL])
    def test_totals_match_matrix(self, family):
        rng = np.random.default_rng(4)
        thetas = np.array([0.3, 0.9, 3.0])
        xs = rng.exponential(1.5, size=5000)
        totals = distributions.log_likelihood_totals(family, thetas, xs)
        expected = distributions.log_likelihood_matrix(family, thetas, xs).sum(axis=0)
        np.testing.assert_allclose(totals, expected, rtol=1e-9)

    @pytest.mark.parametrize("family,theta,lower", [
        (NORMAL, 0.0, -np.inf),
        (NORMAL, 2.5, -np.inf),
        (EXPONENTIAL, 0.5, 0.0),
        (EXPONENTIAL, 3.0, 0.0),
    ])
    def test_density_integrates_to_one(self, family, theta, lower):
        total, _ = integrate.quad(lambda x: 2.0 ** distributions.log_likelihood(family, [theta], x), lower, np.inf)
        assert abs(total - 1.0) <= 1e-3


class TestKlDivergence:
    def test_normal_closed_form(self):
        assert distributions.kl_divergence(NORMAL, [0.0], [3.0]) == pytest.approx(9.0 / (2 * LN2))

    @pytest.mark.parametrize("family,a,b", [(NORMAL, 0.2, 0.2), (EXPONENTIAL, 1.7, 1.7)])
    def test_zero_for_identical(self, family, a, b):
        assert distributions.kl_divergence(family, [a], [b]) == 0.0

    @pytest.mark.parametrize("mi,mj", [(1.0, 2.0), (0.3, 3.0), (5.0, 0.5)])
    def test_exponential_against_quadrature(self, mi, mj):
        def integrand(x):
            return stats.expon.pdf(x, scale=mi) * (stats.expon.logpdf(x, scale=mi) - stats.expon.logpdf(x, scale=mj))

        nats, _ = integrate.quad(integrand, 0, np.inf)
        assert distributions.kl_divergence(EXPONENTIAL, [mi], [mj]) == pytest.approx(nats / LN2, rel=1e-6)

    def test_family_mismatch(self):
        with pytest.raises(UsageError):
            distributions.kl_divergence(NORMAL, [0.0], [1.0], family_j=EXPONENTIAL)
        assert distributions.kl_divergence(EXPONENTIAL, [1.0], [2.0], family_j=EXPONENTIAL) == pytest.approx(
            (LN2 + 0.5 - 1.0) / LN2
        )

    def test_matrix_is_non_negative_with_zero_diagonal(self):
        kl = distributions.kl_matrix(EXPONENTIAL, np.array([0.1, 0.5, 1.0, 4.0]))
        assert np.all(kl >= 0)
        assert np.all(np.diag(kl) == 0)

    @pytest.mark.parametrize("family", [NORMAL, EXPONENTIAL])
    def test_monte_carlo_oracle(self, family):
        """
        Closed form vs the sample mean of the per-sample log ratio over 50
        random pairs. Each z-score is a standard normal draw, so with 50 pairs
        about one is expected past 3 SE by chance; the check allows 5% there
        and none past 5 SE.
        """
        rng = np.random.default_rng(2024)
        n = 100_000
        z_scores = []
        for _ in range(50):
            if family is NORMAL:
                ti, tj = rng.uniform(-3.0, 3.0, size=2)
            else:
                ti, tj = rng.uniform(0.2, 5.0, size=2)
            xs = distributions.sample_block(family, [ti], rng, n)
            ll = distributions.log_likelihood_matrix(family, np.array([ti, tj]), xs)
            ratio = ll[:, 0] - ll[:, 1]
            stderr = ratio.std(ddof=1) / math.sqrt(n)
            closed = distributions.kl_divergence(family, [ti], [tj])
            z_scores.append(abs(ratio.mean() - closed) / stderr)

        z = np.array(z_scores)
        assert np.mean(z <= 3.0) >= 0.95
        assert np.all(z <= 5.0)


class TestDistances:
    def test_squared_distance(self):
        assert distributions.squared_param_distance([1.0], [4.0]) == 9.0

    def test_dimension_mismatch(self):
        with pytest.raises(UsageError):
            distributions.squared_param_distance([1.0], [1.0, 2.0])

    def test_matrix(self):
        sq = distributions.squared_distance_matrix(np.array([[0.0], [1.0], [3.0]]))
        np.testing.assert_array_equal(sq, [[0, 1, 9], [1, 0, 4], [9, 4, 0]])


class TestSampling:
    def test_exponential_mean(self):
        rng = np.random.default_rng(0)
        xs = distributions.sample_block(EXPONENTIAL, [2.5], rng, 200_000)
        assert np.all(xs >= 0)
        assert xs.mean() == pytest.approx(2.5, rel=0.02)

    def test_single_sample_is_float(self):
        assert isinstance(distributions.sample(NORMAL, [0.0], np.random.default_rng(1)), float)

    @pytest.mark.parametrize("family,theta,tolerance", [(NORMAL, 3.0, 0.005), (EXPONENTIAL, 2.0, 0.011)])
    def test_mean_of_a_million_draws(self, family, theta, tolerance):
        xs = distributions.sample_block(family, [theta], make_stream(17), 1_000_000)
        assert abs(xs.mean() - theta) <= tolerance

    def test_fixed_seed_repeats_sequence(self):
        first, second = make_stream(9), make_stream(9)
        a = [distributions.sample(NORMAL, [3.0], first) for _ in range(100)]
        b = [distributions.sample(NORMAL, [3.0], second) for _ in range(100)]
        assert a == b
        assert len(set(a)) == 100
