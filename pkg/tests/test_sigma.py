import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pitmanyor.distributions import GaussianLaw, named_law
from pitmanyor.errors import ConfigError, DomainError
from pitmanyor.sigma import (
    INTERIOR,
    LOWER,
    UPPER,
    ascending_factorial_log,
    eppf_log,
    eppf_log_grid,
    eppf_total_mass,
    mle_sigma,
    score,
    set_partitions,
    sigma_posterior,
)
from pitmanyor.stats import summarize, summary_from_counts


def crp_probability(labels, sigma, M):
    """Probability of a seating sequence under the two-parameter Chinese restaurant."""
    sizes = []
    p = 1.0
    for i, lab in enumerate(labels):
        if lab == len(sizes):
            p *= (M + sigma * len(sizes)) / (M + i) if i else 1.0
            sizes.append(1)
        else:
            p *= (sizes[lab] - sigma) / (M + i)
            sizes[lab] += 1
    return p


# --- building blocks ------------------------------------------------------------


def test_ascending_factorial():
    assert ascending_factorial_log(2.0, 3) == pytest.approx(math.log(24))
    assert ascending_factorial_log(0.0, 0) == 0.0
    assert ascending_factorial_log(0.5, 1) == pytest.approx(math.log(0.5))
    with pytest.raises(DomainError):
        ascending_factorial_log(0.0, 2)


def test_bell_numbers():
    assert [sum(1 for _ in set_partitions(n)) for n in range(1, 8)] == [1, 2, 5, 15, 52, 203, 877]


@pytest.mark.parametrize(
    "data, sigma, M, want",
    [((4.0,), 0.3, 2.0, 0.0), ((1, 1), 0.5, 1.0, math.log(0.25)), ((1, 2), 0.5, 1.0, math.log(0.75))],
)
def test_eppf_examples(data, sigma, M, want):
    assert eppf_log(summarize(data), sigma, M) == pytest.approx(want, abs=1e-15)


def test_eppf_rejects_sigma_one():
    with pytest.raises(DomainError):
        eppf_log(summarize((1, 1)), 1.0, 1.0)


def test_dirichlet_without_mass_puts_everything_on_one_block():
    assert eppf_log(summarize((1, 2)), 0.0, 0.0) == -math.inf
    assert eppf_log(summarize((1, 1, 1)), 0.0, 0.0) == 0.0


@given(st.lists(st.integers(0, 5), min_size=1, max_size=25), st.floats(0, 0.95), st.floats(0.05, 8))
def test_eppf_matches_chinese_restaurant(data, sigma, M):
    # relabel in order of first appearance to get a seating sequence
    first = {}
    labels = [first.setdefault(x, len(first)) for x in data]
    want = crp_probability(labels, sigma, M)
    assert math.exp(eppf_log(summarize(data), sigma, M)) == pytest.approx(want, rel=1e-10)


def test_eppf_total_mass_examples():
    assert eppf_total_mass(1, 0.4, 2.0) == 1.0
    assert eppf_total_mass(3, 0.5, 1.0) == pytest.approx(1.0, abs=1e-14)
    assert eppf_total_mass(8, 0.9, 0.0) == pytest.approx(1.0, abs=1e-10)
    with pytest.raises(ConfigError):
        eppf_total_mass(11, 0.5, 1.0)


def test_grid_agrees_with_scalar():
    s = summarize([1, 1, 1, 2, 2, 3, 4, 4, 4, 4, 5])
    grid = np.linspace(0.01, 0.99, 17)
    np.testing.assert_allclose(eppf_log_grid(s, grid, 1.5), [eppf_log(s, x, 1.5) for x in grid], rtol=1e-12)


# --- score -----------------------------------------------------------------------


def test_score_examples():
    s = summarize((2, 2, 5))
    assert score(s, 0.5, 1.0) == pytest.approx(-4 / 3)
    assert score(s, 0.0, 1.0) == pytest.approx(0.0, abs=1e-15)


def test_score_at_zero_with_unit_mass_is_half_k_k_minus_one_minus_tie_sum():
    s = summarize([1, 1, 1, 2, 2, 3, 4, 5, 5, 5, 5])
    K = s.K
    ties = sum(s.Z(l + 1) / l for l in range(1, s.n))
    assert score(s, 0.0, 1.0) == pytest.approx(0.5 * K * (K - 1) - ties)


def test_score_positive_without_ties():
    s = summarize(range(12))
    assert all(score(s, x, 1.0) > 0 for x in np.linspace(0, 0.999, 50))


summaries = st.lists(st.integers(1, 6), min_size=2, max_size=12).map(summary_from_counts)


@given(summaries, st.floats(0.05, 0.9), st.floats(0.1, 10))
@settings(max_examples=150)
def test_score_is_derivative_of_log_eppf(s, sigma, M):
    h = 1e-5
    fd = (eppf_log(s, sigma + h, M) - eppf_log(s, sigma - h, M)) / (2 * h)
    assert score(s, sigma, M) == pytest.approx(fd, rel=1e-6, abs=1e-6)


@given(summaries, st.floats(0, 10))
def test_score_strictly_decreasing_with_a_tie(s, M):
    if s.K == s.n or s.K < 2:
        s = summary_from_counts([2, 1])
    vals = [score(s, x, M) for x in np.linspace(0.0, 0.99, 60)]
    finite = [v for v in vals if math.isfinite(v)]
    assert all(a > b for a, b in zip(finite, finite[1:]))


# --- maximum likelihood -------------------------------------------------------------


def test_mle_examples():
    fit = mle_sigma(summarize((2, 2, 5)), 1.0)
    assert (fit.sigma_hat, fit.at_boundary) == (0.0, LOWER)
    fit = mle_sigma(summarize(GaussianLaw(0, 1).sample(np.random.default_rng(0), 50)), 1.0)
    assert (fit.sigma_hat, fit.at_boundary) == (1.0, UPPER)


def test_interior_mle_is_score_root():
    s = summary_from_counts([1] * 30 + [2] * 5 + [7, 9])
    fit = mle_sigma(s, 1.0)
    assert fit.at_boundary == INTERIOR
    assert score(s, fit.sigma_hat - 1e-9, 1.0) > 0 > score(s, fit.sigma_hat + 1e-9, 1.0)
    grid = np.linspace(0.001, 0.999, 999)
    assert abs(grid[np.argmax(eppf_log_grid(s, grid, 1.0))] - fit.sigma_hat) <= 0.001


@given(st.lists(st.integers(0, 20), min_size=2, max_size=80), st.randoms(), st.floats(0.1, 5))
@settings(max_examples=60)
def test_mle_permutation_and_relabel_invariant(data, rnd, M):
    other = [x * 7 + 3 for x in data]
    rnd.shuffle(other)
    assert mle_sigma(summarize(data), M) == mle_sigma(summarize(other), M)


# --- grid posterior -----------------------------------------------------------------


def test_single_observation_gives_uniform_posterior():
    post = sigma_posterior(summarize([2.5]), 1.0)
    np.testing.assert_allclose(post.probs, 1 / 1024)
    assert post.mean == pytest.approx(0.5)
    assert post.quantile(0.3) == pytest.approx(0.3)
    assert post.mass(0.2, 0.6) == pytest.approx(0.4)


def test_grid_size_floor():
    with pytest.raises(ConfigError):
        sigma_posterior(summarize([1, 1, 2]), 1.0, grid_size=32)


@given(st.lists(st.integers(1, 8), min_size=3, max_size=40).map(summary_from_counts), st.floats(0.2, 5))
@settings(max_examples=60)
def test_mode_within_one_cell_of_interior_mle(s, M):
    fit = mle_sigma(s, M)
    if fit.at_boundary != INTERIOR:
        return
    post = sigma_posterior(s, M, grid_size=256)
    assert abs(post.mode - fit.sigma_hat) <= 1 / 256


def test_quantile_inverts_cdf():
    post = sigma_posterior(summary_from_counts([1] * 40 + [3] * 6 + [10]), 1.0)
    q = np.linspace(0.01, 0.99, 25)
    np.testing.assert_allclose(post.cdf(post.quantile(q)), q, atol=1e-12)
    x = post.sample(np.random.default_rng(0), 20000)
    assert np.mean(x) == pytest.approx(post.mean, abs=0.01)


def test_prior_enters_the_weights():
    s = summary_from_counts([1] * 10 + [2] * 3)
    flat = sigma_posterior(s, 1.0)
    tilted = sigma_posterior(s, 1.0, prior=lambda x: np.exp(3 * np.asarray(x)))
    assert tilted.mean > flat.mean
    with pytest.raises(ConfigError):
        sigma_posterior(s, 1.0, prior=lambda x: np.zeros_like(x))


def test_consistency_for_p2():
    # weights proportional to j^-2 are regularly varying with exponent 1/2
    s = summarize(named_law("P2").sample(np.random.default_rng(8), 10**5))
    fit = mle_sigma(s, 1.0)
    assert 0.4 <= fit.sigma_hat <= 0.6
    assert sigma_posterior(s, 1.0).mass(0.4, 0.6) >= 0.95
