import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from entropy_execution.entropy_core import (
    DiscretizedDensity,
    QuadraticCost,
    functional_value,
    gibbs_posterior_oracle,
    kl_gaussian,
    minimize_entropy_functional,
    oracle_grid,
)
from entropy_execution.errors import DegenerateNormalizer, PrecisionViolation, SupportTooNarrow
from entropy_execution.model_config import GaussianDist

KL_PRECISION_2_VS_1 = 0.09657359027997265470862  # (1/2)(1/2 - 1 + ln 2)


def test_kl_examples():
    p = GaussianDist(0.3, 2.0)
    assert kl_gaussian(p, p) == 0.0
    assert kl_gaussian(GaussianDist(1, 1), GaussianDist(0, 1)) == pytest.approx(0.5, rel=1e-15)
    assert kl_gaussian(GaussianDist(0, 2), GaussianDist(0, 1)) == pytest.approx(KL_PRECISION_2_VS_1, rel=1e-14)


def test_kl_matches_quadrature():
    p, q = GaussianDist(0.0, 2.0), GaussianDist(0.0, 1.0)
    a = np.linspace(-10 * q.std, 10 * q.std, 200001)
    h = a[1] - a[0]
    integrand = p.pdf(a) * (p.logpdf(a) - q.logpdf(a))
    assert h * integrand.sum() == pytest.approx(kl_gaussian(p, q), rel=1e-9)


@settings(max_examples=300, deadline=None)
@given(m1=st.floats(-1e3, 1e3), m2=st.floats(-1e3, 1e3), s1=st.floats(1e-6, 1e6), s2=st.floats(1e-6, 1e6))
def test_kl_nonnegative(m1, m2, s1, s2):
    assert kl_gaussian(GaussianDist(m1, s1), GaussianDist(m2, s2)) >= 0.0


def test_minimizer_zero_cost_is_prior():
    prior = GaussianDist(1.5, 3.0)
    post, value = minimize_entropy_functional(QuadraticCost(0.0, 0.0), prior, 0.7)
    assert post == prior and value == 0.0


def test_minimizer_benchmark_example():
    post, _ = minimize_entropy_functional(QuadraticCost(9e-7, -2.5), GaussianDist(0.0, 1e-8), 1.0)
    assert post.precision == pytest.approx(9.1e-7, rel=1e-14)
    assert post.mean == pytest.approx(2747252.747252747252747, rel=1e-13)


def test_minimizer_rejects_bad_precision():
    with pytest.raises(PrecisionViolation):
        minimize_entropy_functional(QuadraticCost(-2.0, 0.0), GaussianDist(0.0, 1.0), 1.0)
    with pytest.raises(PrecisionViolation):
        minimize_entropy_functional(QuadraticCost(1.0, 0.0), GaussianDist(0.0, 1e16), 1.0)


def _random_case(rng):
    s = 10 ** rng.uniform(-3, 3)
    beta = 10 ** rng.uniform(-1, 1)
    c2 = rng.uniform(-0.8, 3.0) * s / beta
    c1 = rng.normal() * math.sqrt(s) / beta
    return QuadraticCost(c2, c1), GaussianDist(rng.normal() / math.sqrt(s), s), beta


def test_functional_value_at_prior_and_posterior():
    rng = np.random.default_rng(5)
    for _ in range(20):
        cost, prior, beta = _random_case(rng)
        post, value = minimize_entropy_functional(cost, prior, beta)
        grid = oracle_grid(prior, post)
        assert functional_value(DiscretizedDensity.from_gaussian(prior, grid), QuadraticCost(0, 0),
                                prior, beta) == pytest.approx(0.0, abs=1e-6)
        at_post = functional_value(DiscretizedDensity.from_gaussian(post, grid), cost, prior, beta)
        assert at_post == pytest.approx(value, rel=1e-6, abs=1e-9)
        shifted = GaussianDist(post.mean + post.std, post.precision)
        assert functional_value(DiscretizedDensity.from_gaussian(shifted, grid), cost, prior, beta) > value


def test_functional_value_support_check():
    prior = GaussianDist(0.0, 1.0)
    pi = DiscretizedDensity.from_gaussian(prior, np.linspace(-3, 3, 601))
    with pytest.raises(SupportTooNarrow):
        functional_value(pi, QuadraticCost(1.0, 0.0), prior, 1.0)


def test_minimizer_beats_perturbations():
    rng = np.random.default_rng(11)
    for _ in range(30):
        cost, prior, beta = _random_case(rng)
        post, value = minimize_entropy_functional(cost, prior, beta)
        grid = oracle_grid(prior, post, n_points=4001)
        base = DiscretizedDensity.from_gaussian(post, grid)
        for _ in range(20):
            bump = rng.normal(size=3)
            z = (grid - post.mean) / post.std
            log_w = base.log_weights + 0.3 * (bump[0] * np.tanh(z) + bump[1] * np.cos(z) + bump[2] * np.exp(-z * z))
            pert = DiscretizedDensity(grid, None, log_weights=log_w)
            assert functional_value(pert, cost, prior, beta) >= value - 1e-8 * max(1.0, abs(value))


def test_functional_convexity():
    rng = np.random.default_rng(3)
    prior = GaussianDist(0.2, 1.5)
    cost = QuadraticCost(0.7, -0.4)
    grid = oracle_grid(prior, GaussianDist(0.0, 0.5), width=14, n_points=8001)
    for _ in range(30):
        d1 = DiscretizedDensity.from_gaussian(GaussianDist(rng.normal(), 10 ** rng.uniform(-0.3, 0.7)), grid)
        d2 = DiscretizedDensity.from_gaussian(GaussianDist(rng.normal(), 10 ** rng.uniform(-0.3, 0.7)), grid)
        lam = rng.uniform()
        mix = DiscretizedDensity(grid, lam * d1.weights + (1 - lam) * d2.weights)
        lhs = functional_value(mix, cost, prior, 1.3)
        rhs = lam * functional_value(d1, cost, prior, 1.3) + (1 - lam) * functional_value(d2, cost, prior, 1.3)
        assert lhs <= rhs + 1e-9


def test_gibbs_oracle_constant_and_quadratic():
    prior_g = GaussianDist(0.0, 1e-8)
    post_g, _ = minimize_entropy_functional(QuadraticCost(9e-7, -2.5), prior_g, 1.0)
    grid = oracle_grid(prior_g, post_g)
    prior = DiscretizedDensity.from_gaussian(prior_g, grid)
    same = gibbs_posterior_oracle(prior, np.full(grid.shape, 7.0), 1.0)
    assert same.total_variation(prior) < 1e-12
    post = gibbs_posterior_oracle(prior, QuadraticCost(9e-7, -2.5), 1.0)
    assert post.mean() == pytest.approx(post_g.mean, rel=1e-4)
    assert 1.0 / post.variance() == pytest.approx(post_g.precision, rel=1e-4)


def test_gibbs_oracle_vanishing_beta():
    prior_g = GaussianDist(1.0, 2.0)
    grid = oracle_grid(prior_g)
    prior = DiscretizedDensity.from_gaussian(prior_g, grid)
    post = gibbs_posterior_oracle(prior, QuadraticCost(1.0, 3.0), 1e-12)
    assert post.total_variation(prior) < 1e-6


@pytest.mark.filterwarnings("ignore:overflow")
def test_gibbs_oracle_degenerate():
    grid = np.linspace(-1.0, 1.0, 11)
    prior = DiscretizedDensity(grid, np.exp(-grid**2))
    with pytest.raises(DegenerateNormalizer):
        gibbs_posterior_oracle(prior, np.full(11, 1e308), 1e10)
    with pytest.raises(ValueError):
        gibbs_posterior_oracle(prior, np.r_[np.zeros(10), np.nan], 1.0)
