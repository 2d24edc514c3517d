import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from pitmanyor.distributions import GaussianLaw, Identity, IndicatorAbove, TwoSided
from pitmanyor.errors import ConfigError, IterationCapError
from pitmanyor.evaluators import CdfGrid, FunctionalSet
from pitmanyor import stickbreaking
from pitmanyor.stickbreaking import (
    PYParams,
    WeightedAtoms,
    expected_sticks,
    integrate,
    py_functional_batch,
    sample_py,
    tail_square_mass,
)

G = GaussianLaw(1.0, 1.0)


def test_params_validation():
    with pytest.raises(ConfigError):
        PYParams(1.0, 1.0)
    with pytest.raises(ConfigError):
        PYParams(0.5, -0.1)


@given(st.floats(0, 0.95), st.floats(0, 20), st.floats(1e-3, 0.999), st.integers(0, 2**32))
@settings(max_examples=60, deadline=None)
def test_truncated_draw_is_probability_measure(sigma, M, eps, seed):
    assume(expected_sticks(sigma, M, eps) < 500)
    m = sample_py(PYParams(sigma, M), eps, np.random.default_rng(seed))
    assert np.all(m.weights > 0)
    assert m.total_mass == pytest.approx(1.0, abs=1e-12)
    k = len(m.sticks)
    # leftover mass below the truncation level
    assert m.weights[k:].sum() + m.diffuse < eps
    # stick identity on every prefix
    left = np.cumprod(1.0 - m.sticks)
    used = np.cumsum(m.weights[:k])
    np.testing.assert_allclose(1.0 - used, left, atol=1e-12)


def test_eps_near_one_breaks_a_single_stick():
    m = sample_py(PYParams(0.3, 2.0), 1 - 1e-12, np.random.default_rng(0))
    assert m.residual_index == 1 and len(m.sticks) == 1


def test_dirichlet_residual_halves_per_stick():
    # sigma = 0, M = 1: E prod (1 - V_j) = 2^-k
    rng = np.random.default_rng(1)
    V = rng.beta(1.0, 1.0, size=(200000, 3))
    np.testing.assert_allclose(np.cumprod(1 - V, axis=1).mean(axis=0), [0.5, 0.25, 0.125], rtol=0.01)
    counts = [sample_py(PYParams(0.0, 1.0), 0.5, rng).residual_index for _ in range(4000)]
    assert 1 <= np.mean(counts) <= 3


def test_first_weight_mean():
    rng = np.random.default_rng(2)
    w1 = [sample_py(PYParams(0.5, 1.0), 0.9, rng).weights[0] for _ in range(100000)]
    assert np.mean(w1) == pytest.approx(0.25, abs=0.005)


def test_integrate_examples():
    one = WeightedAtoms(np.array([3.0]), np.array([1.0]), 0.0, G, np.array([]), 0)
    assert integrate(one, IndicatorAbove(2)) == 1.0
    two = WeightedAtoms(np.array([0.0, 4.0]), np.array([0.5, 0.5]), 0.0, G, np.array([]), 1)
    assert integrate(two, Identity()) == 2.0
    m = sample_py(PYParams(0.5, 1.0), 1e-3, np.random.default_rng(3))
    assert integrate(m, IndicatorAbove(-1e300)) == pytest.approx(1.0, abs=1e-12)


def test_iteration_cap(monkeypatch):
    monkeypatch.setattr(stickbreaking, "MAX_STICKS", 5)
    with pytest.raises(IterationCapError):
        sample_py(PYParams(0.9, 100.0), 1e-9, np.random.default_rng(0))


def test_bad_eps():
    with pytest.raises(ConfigError):
        sample_py(PYParams(0.5, 1.0), 0.0, np.random.default_rng(0))


def test_tail_square_mass_matches_simulation():
    # E sum W_i^2 = (1 - sigma)/(1 + theta); the residual atom keeps this exact
    # even under coarse truncation
    rng = np.random.default_rng(4)
    sq = [np.sum(sample_py(PYParams(0.4, 2.0), 0.05, rng).weights ** 2) for _ in range(20000)]
    assert np.mean(sq) == pytest.approx(tail_square_mass(0.4, 2.0), rel=0.03)


@pytest.mark.parametrize("sigma, M", [(0.0, 1.0), (0.5, 1.0), (0.75, 10.0)])
def test_prior_mean_and_variance(sigma, M):
    # PY prior: E Pf = Gf, Var Pf = (1 - sigma)/(1 + M) * Var_G f, at any truncation level
    f = IndicatorAbove(2.0)
    D = 50000
    vals = py_functional_batch(np.full(D, sigma), np.full(D, M), np.full(D, 0.3), G,
                               FunctionalSet([f]), np.random.default_rng(5))[:, 0]
    gf = G.integral(f)
    var = (1 - sigma) / (1 + M) * gf * (1 - gf)
    assert abs(vals.mean() - gf) < 3 * math.sqrt(var / D)
    assert vals.var() == pytest.approx(var, rel=0.03)


def test_batch_agrees_with_scalar_sampler():
    f = TwoSided(1.0)
    rng = np.random.default_rng(6)
    scalar = [integrate(sample_py(PYParams(0.5, 3.0), 0.2, rng), f) for _ in range(20000)]
    batch = py_functional_batch(np.full(20000, 0.5), np.full(20000, 3.0), np.full(20000, 0.2), G,
                                FunctionalSet([f]), rng)[:, 0]
    se = math.sqrt(np.var(scalar) / 20000 + np.var(batch) / 20000)
    assert abs(np.mean(scalar) - np.mean(batch)) < 4 * se
    assert np.var(batch) == pytest.approx(np.var(scalar), rel=0.05)


def test_stick_budget_keeps_prior_moments():
    # sigma close to 1 never reaches the threshold; the budget cuts the draw short
    f = IndicatorAbove(2.0)
    D, sigma, M = 40000, 0.98, 2.0
    vals = py_functional_batch(np.full(D, sigma), np.full(D, M), np.full(D, 1e-3), G,
                               FunctionalSet([f]), np.random.default_rng(8), budget=64)[:, 0]
    gf = G.integral(f)
    var = (1 - sigma) / (1 + M) * gf * (1 - gf)
    assert abs(vals.mean() - gf) < 4 * math.sqrt(var / D)
    # the draws are heavy-tailed here, so judge the variance by its own standard error
    sq = (vals - gf) ** 2
    assert abs(sq.mean() - var) < 4 * sq.std() / math.sqrt(D)


def test_strict_truncation_hits_iteration_cap(monkeypatch):
    monkeypatch.setattr(stickbreaking, "MAX_STICKS", 100)
    with pytest.raises(IterationCapError):
        py_functional_batch(np.full(3, 0.99), np.full(3, 1.0), np.full(3, 1e-3), G,
                            FunctionalSet([IndicatorAbove(0)]), np.random.default_rng(0), budget=None)


def test_cdf_grid_accumulates_like_indicators():
    grid = np.array([-1.0, 0.5, 1.0, 2.0])
    rng = np.random.default_rng(7)
    W = rng.random((5, 8))
    X = rng.normal(size=(5, 8))
    X[0, 0] = 1.0  # atom exactly on a grid point counts in F(1)
    got = CdfGrid(grid).accumulate(W, X)
    want = np.stack([(W * (X <= t)).sum(axis=1) for t in grid], axis=1)
    np.testing.assert_allclose(got, want, atol=1e-14)


def test_expected_sticks_is_sane():
    assert expected_sticks(0.0, 1.0, 0.5) == pytest.approx(1.0)
    assert expected_sticks(0.5, 1.0, 0.01) > expected_sticks(0.5, 1.0, 0.1)
