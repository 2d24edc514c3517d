"""Inference on the type parameter sigma from the induced partition.

The likelihood of sigma (with M held fixed) is the exchangeable partition
probability function

    p(sigma) = prod_{i=1}^{K-1} (M + i*sigma) / (M+1)^{[n-1]} * prod_j (1-sigma)^{[N_j - 1]},

which depends on the data only through K and the occupancy counts Z_l.  Its
logarithm is strictly concave in sigma as soon as there is a tie, so the
maximiser is found by bisection on the score.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import ConfigError, DomainError
from .stats import PartitionSummary, summary_from_counts

LOWER, UPPER, INTERIOR = "lower", "upper", "interior"
BISECTION_DELTA = 1e-12


def ascending_factorial_log(a: float, n: int) -> float:
    """log of a(a+1)...(a+n-1); the empty product (n = 0) is 1."""
    if n < 0:
        raise DomainError("ascending factorial needs n >= 0")
    if n == 0:
        return 0.0
    if a <= 0:
        raise DomainError(f"ascending factorial of {a} hits a nonpositive factor")
    return math.fsum(np.log(a + np.arange(n, dtype=float)))


def _check_sigma(sigma: float, M: float):
    if not 0.0 <= sigma < 1.0:
        raise DomainError(f"sigma must lie in [0, 1), got {sigma}")
    if M < 0:
        raise DomainError(f"M must be nonnegative, got {M}")


def _tie_terms(summary: PartitionSummary):
    """(l, Z_{l+1}) for l >= 1 with Z_{l+1} > 0."""
    occ = summary.occupancy
    l = np.arange(1, len(occ))
    z = occ[1:].astype(float)
    keep = z > 0
    return l[keep].astype(float), z[keep]


def eppf_log(summary: PartitionSummary, sigma: float, M: float) -> float:
    """Log probability of the observed partition under PY(sigma, M).

    With M = sigma = 0 every partition with two or more blocks has probability
    zero and the value is -inf.
    """
    _check_sigma(sigma, M)
    K, n = summary.K, summary.n
    new = M + sigma * np.arange(1, K, dtype=float)
    if np.any(new <= 0):
        return -math.inf
    l, z = _tie_terms(summary)
    return (
        math.fsum(np.log(new))
        - ascending_factorial_log(M + 1.0, n - 1)
        + math.fsum(z * np.log(l - sigma))
    )


def eppf_log_grid(summary: PartitionSummary, sigmas, M: float) -> np.ndarray:
    """eppf_log on an array of sigma values, up to the sigma-free constant."""
    sigmas = np.asarray(sigmas, dtype=float)
    i = np.arange(1, summary.K, dtype=float)
    l, z = _tie_terms(summary)
    with np.errstate(divide="ignore"):
        out = np.log(M + np.outer(sigmas, i)).sum(axis=1)
        out += (z * np.log(l - sigmas[:, None])).sum(axis=1)
    return out - ascending_factorial_log(M + 1.0, summary.n - 1)


def set_partitions(n: int):
    """All set partitions of {0..n-1} as restricted growth strings."""
    if n == 0:
        yield ()
        return
    labels = [0] * n

    def grow(pos, top):
        if pos == n:
            yield tuple(labels)
            return
        for b in range(top + 2):
            labels[pos] = b
            yield from grow(pos + 1, max(top, b))

    labels[0] = 0
    yield from grow(1, 0)


def eppf_total_mass(n: int, sigma: float, M: float) -> float:
    """Sum of the EPPF over every set partition of {1..n}; equals 1."""
    if not 1 <= n <= 10:
        raise ConfigError("exhaustive enumeration is limited to 1 <= n <= 10")
    cache = {}
    terms = []
    for rgs in set_partitions(n):
        shape = tuple(sorted(np.bincount(rgs).tolist()))
        if shape not in cache:
            cache[shape] = math.exp(eppf_log(summary_from_counts(shape), sigma, M))
        terms.append(cache[shape])
    return math.fsum(terms)


def score(summary: PartitionSummary, sigma: float, M: float) -> float:
    """Derivative in sigma of the log-EPPF.

    sum_{l<K} l/(M + l*sigma) - sum_l Z_{l+1}/(l - sigma); at sigma = 0 this
    is the right-derivative, +inf when M = 0 and K >= 2.
    """
    _check_sigma(sigma, M)
    i = np.arange(1, summary.K, dtype=float)
    denom = M + sigma * i
    if i.size and np.any(denom <= 0):
        return math.inf
    l, z = _tie_terms(summary)
    try:
        with np.errstate(over="ignore"):
            return math.fsum(i / denom) - math.fsum(z / (l - sigma))
    except OverflowError:
        # M is subnormal and sigma ~ 0: the positive first sum blows up
        return math.inf


@dataclass(frozen=True)
class SigmaFit:
    sigma_hat: float
    at_boundary: str
    score_at_hat: float
    iterations: int


def mle_sigma(summary: PartitionSummary, M: float) -> SigmaFit:
    """Empirical-Bayes estimate of sigma: the maximiser of the log-EPPF on [0, 1]."""
    if summary.K == summary.n:
        # no ties: the likelihood increases all the way to sigma = 1
        return SigmaFit(1.0, UPPER, math.inf if summary.n > 1 else 0.0, 0)
    s0 = score(summary, 0.0, M)
    if s0 <= 0:
        return SigmaFit(0.0, LOWER, s0, 0)
    lo, hi = 0.0, 1.0 - BISECTION_DELTA
    s_hi = score(summary, hi, M)
    if s_hi >= 0:
        return SigmaFit(hi, UPPER, s_hi, 0)
    s_lo = s0
    it = 0
    while hi - lo > BISECTION_DELTA:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        it += 1
        s_mid = score(summary, mid, M)
        if s_mid == 0:
            return SigmaFit(mid, INTERIOR, 0.0, it)
        if s_mid > 0:
            lo, s_lo = mid, s_mid
        else:
            hi, s_hi = mid, s_mid
    # keep the endpoint whose score is closer to zero
    if abs(s_lo) <= abs(s_hi):
        return SigmaFit(lo, INTERIOR, s_lo, it)
    return SigmaFit(hi, INTERIOR, s_hi, it)


class SigmaPosterior:
    """Grid posterior for sigma.

    The grid holds the midpoints of ``grid_size`` equal cells of (0, 1).  The
    posterior is treated as piecewise uniform over the cells, which makes the
    CDF continuous and quantiles well defined.
    """

    def __init__(self, grid, log_weights):
        self.grid = np.asarray(grid, dtype=float)
        self.log_weights = np.asarray(log_weights, dtype=float)
        if np.any(np.diff(self.grid) <= 0):
            raise ConfigError("sigma grid must be strictly increasing")
        self.probs = np.exp(self.log_weights - logsumexp(self.log_weights))
        self.probs /= self.probs.sum()
        width = 1.0 / self.grid.size
        self.edges = np.linspace(0.0, 1.0, self.grid.size + 1)
        self._cum = np.concatenate([[0.0], np.cumsum(self.probs)])
        self._cum[-1] = 1.0
        self._width = width

    @property
    def mean(self) -> float:
        return float(np.dot(self.probs, self.grid))

    @property
    def mode(self) -> float:
        return float(self.grid[np.argmax(self.log_weights)])

    def cdf(self, s):
        return np.interp(s, self.edges, self._cum)

    def mass(self, a: float, b: float) -> float:
        return float(self.cdf(b) - self.cdf(a))

    def quantile(self, q):
        q = np.asarray(q, dtype=float)
        # invert the piecewise-linear CDF, skipping cells of zero mass
        idx = np.clip(np.searchsorted(self._cum, q, side="left") - 1, 0, self.grid.size - 1)
        lo, hi = self._cum[idx], self._cum[idx + 1]
        frac = np.where(hi > lo, (q - lo) / np.where(hi > lo, hi - lo, 1.0), 0.0)
        return self.edges[idx] + np.clip(frac, 0.0, 1.0) * self._width

    def sample(self, rng, size=None):
        return self.quantile(rng.random(size))


def uniform_prior(s):
    return np.ones_like(np.asarray(s, dtype=float))


def sigma_posterior(summary: PartitionSummary, M: float, prior=None, grid_size: int = 1024) -> SigmaPosterior:
    if grid_size < 64:
        raise ConfigError("grid_size must be at least 64")
    prior = uniform_prior if prior is None else prior
    grid = (np.arange(grid_size) + 0.5) / grid_size
    density = np.asarray(prior(grid), dtype=float)
    if np.any(~np.isfinite(density)) or np.any(density <= 0):
        raise ConfigError("prior density must be positive and finite on (0, 1)")
    return SigmaPosterior(grid, np.log(density) + eppf_log_grid(summary, grid, M))
