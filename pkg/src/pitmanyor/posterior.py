"""Exact Pitman-Yor posterior: sampling, closed-form moments and their limits.

Given a sample with K distinct values of multiplicities N_1..N_K, the posterior
of P is the law of R*S + (1 - R)*Q with independent

    R ~ Beta(n - sigma*K, M + sigma*K),
    S = sum_j W_j delta_{X_j},  W ~ Dir(N_1 - sigma, ..., N_K - sigma),
    Q ~ PY(sigma, M + sigma*K, G).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distributions import P0Decomposition
from .errors import DegenerateError
from .evaluators import as_evaluator
from .stats import PartitionSummary
from .stickbreaking import PYParams, WeightedAtoms, _beta, integrate, py_functional_batch, sample_py

# Dirichlet blocks are generated in chunks of at most this many gamma variates.
_CHUNK_CELLS = 2_000_000


# below this Dirichlet shape the gamma variates are generated on the log scale
_SMALL_SHAPE = 0.01


def dirichlet_rows(rng, shapes) -> np.ndarray:
    """One Dirichlet vector per row of ``shapes`` (shape (D, K))."""
    shapes = np.asarray(shapes, dtype=float)
    if shapes.min() >= _SMALL_SHAPE:
        g = rng.standard_gamma(shapes)
        return g / g.sum(axis=-1, keepdims=True)
    # Gamma(a) = Gamma(a + 1) * U^(1/a) avoids underflow to an all-zero row
    logg = np.log(rng.standard_gamma(shapes + 1.0)) + np.log(rng.random(shapes.shape)) / shapes
    logg -= logg.max(axis=-1, keepdims=True)
    g = np.exp(logg)
    return g / g.sum(axis=-1, keepdims=True)


def default_eps(n: int, factor: float = 1.0) -> float:
    """Bound on the total weight of the truncated tail of a posterior draw."""
    return factor / math.sqrt(n)


@dataclass(frozen=True)
class PosteriorDraw:
    r: float
    w: np.ndarray
    fresh: WeightedAtoms


def _check(sigma, summary: PartitionSummary):
    if np.any(summary.n - np.asarray(sigma) * summary.K <= 0):
        raise DegenerateError("n - sigma*K must be positive for the Beta mixing weight")


def posterior_draw(params: PYParams, summary: PartitionSummary, eps: float, rng) -> PosteriorDraw:
    """One posterior draw; Q is truncated once (1 - R) times its remaining stick is below eps."""
    sigma, K = params.sigma, summary.K
    _check(sigma, summary)
    r = float(_beta(rng, summary.n - sigma * K, params.M + sigma * K))
    w = dirichlet_rows(rng, summary.mult - sigma)
    q_eps = min(eps / (1.0 - r), 1.0 - 1e-12) if r < 1.0 else 1.0 - 1e-12
    fresh = sample_py(params, q_eps, rng, theta=params.M + sigma * K)
    return PosteriorDraw(r=r, w=w, fresh=fresh)


def eval_draw(draw: PosteriorDraw, summary: PartitionSummary, f) -> float:
    observed = float(np.dot(draw.w, f(summary.distinct)))
    return draw.r * observed + (1.0 - draw.r) * integrate(draw.fresh, f)


def posterior_samples(params: PYParams, summary: PartitionSummary, target, ndraws: int, rng,
                      eps=None, sigmas=None):
    """Posterior draws of one or more functionals, shape (ndraws, width).

    ``target`` is a functional, a list of functionals or an evaluator such as
    :class:`~pitmanyor.evaluators.CdfGrid`.  ``sigmas`` optionally gives one
    type parameter per draw (full-Bayes mixing over sigma).
    """
    evaluator = as_evaluator(target)
    eps = default_eps(summary.n) if eps is None else eps
    n, K, M = summary.n, summary.K, params.M
    if sigmas is None:
        sigmas = np.full(ndraws, params.sigma)
    sigmas = np.asarray(sigmas, dtype=float)
    _check(sigmas, summary)
    observed = evaluator.values(summary.distinct)  # (K, width)
    out = np.empty((ndraws, evaluator.width))
    chunk = max(1, min(ndraws, _CHUNK_CELLS // max(K, 1)))
    for start in range(0, ndraws, chunk):
        s = sigmas[start:start + chunk]
        D = s.shape[0]
        R = _beta(rng, n - s * K, M + s * K)
        S = dirichlet_rows(rng, summary.mult[None, :] - s[:, None]) @ observed
        spare = 1.0 - R
        threshold = np.where(spare > 0, eps / np.where(spare > 0, spare, 1.0), np.inf)
        Q = py_functional_batch(s, M + s * K, threshold, params.G, evaluator, rng)
        out[start:start + D] = R[:, None] * S + spare[:, None] * Q
    return out


# ---------------------------------------------------------------------------
# Closed-form moments
# ---------------------------------------------------------------------------


def _weighted_sums(params, summary, f):
    fx = f(summary.distinct)
    a = summary.mult - params.sigma
    return math.fsum(a * fx), math.fsum(a * fx**2)


def posterior_mean_exact(params: PYParams, summary: PartitionSummary, f) -> float:
    n, K, M, s = summary.n, summary.K, params.M, params.sigma
    lin, _ = _weighted_sums(params, summary, f)
    return lin / (n + M) + (M + s * K) / (n + M) * params.G.integral(f)


def posterior_variance_exact(params: PYParams, summary: PartitionSummary, f) -> float:
    """Var(Pf | X_1..X_n) in closed form (law of total variance over R)."""
    n, K, M, s = summary.n, summary.K, params.M, params.sigma
    G = params.G
    Gf = G.integral(f)
    var_G = G.integral_sq(f) - Gf**2
    lin, sq = _weighted_sums(params, summary, f)
    a = n - s * K  # total Dirichlet mass
    b = M + s * K  # concentration of the fresh PY component
    nm = (n + M) * (n + M + 1)
    shift = (lin / a - Gf) ** 2 * a * b / ((n + M) ** 2 * (n + M + 1))
    return shift - lin**2 / (a * nm) + sq / nm + (1.0 - s) * b / nm * var_G


def _limit_parts(decomp: P0Decomposition, f):
    lam = decomp.lam
    d_mean = decomp.discrete.integral(f) if lam < 1 else 0.0
    d_sq = decomp.discrete.integral_sq(f) if lam < 1 else 0.0
    c_mean = decomp.continuous.integral(f) if lam > 0 else 0.0
    c_sq = decomp.continuous.integral_sq(f) if lam > 0 else 0.0
    return lam, d_mean, d_sq, c_mean, c_sq


def limit_mean(decomp: P0Decomposition, sigma: float, G, f) -> float:
    lam, d_mean, _, c_mean, _ = _limit_parts(decomp, f)
    return (1 - lam) * d_mean + (1 - sigma) * lam * c_mean + lam * sigma * G.integral(f)


def limit_variance(decomp: P0Decomposition, sigma: float, G, f) -> float:
    """Limit of n * Var(Pf | X_1..X_n) as n -> infinity (five-term form)."""
    lam, d_mean, d_sq, c_mean, c_sq = _limit_parts(decomp, f)
    Gf = G.integral(f)
    var_G = G.integral_sq(f) - Gf**2
    sl = sigma * lam
    out = (1 - lam) * (d_sq - d_mean**2) + (1 - sigma) * lam * (c_sq - c_mean**2)
    out += (1 - sigma) * sl * var_G
    if sl < 1:
        out += (1 - sigma) * lam * (1 - lam) / (1 - sl) * (d_mean - c_mean) ** 2
        centre = ((1 - lam) * d_mean + (1 - sigma) * lam * c_mean) / (1 - sl)
        out += (1 - sl) * sl * (centre - Gf) ** 2
    return out


def limit_variance_termwise(decomp: P0Decomposition, sigma: float, G, f) -> float:
    """Same limit, summed term by term from the exact variance before regrouping."""
    lam, d_mean, d_sq, c_mean, c_sq = _limit_parts(decomp, f)
    Gf = G.integral(f)
    var_G = G.integral_sq(f) - Gf**2
    sl = sigma * lam
    T = (1 - lam) * d_mean + (1 - sigma) * lam * c_mean
    return (
        (1 - sl) * sl * (T / (1 - sl) - Gf) ** 2
        - T**2 / (1 - sl)
        + (1 - lam) * d_sq
        + (1 - sigma) * lam * c_sq
        + (1 - sigma) * sl * var_G
    )
