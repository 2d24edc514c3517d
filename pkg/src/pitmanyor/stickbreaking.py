"""Realizations of PY(sigma, M, G) by truncated stick-breaking.

Sticks V_i ~ Beta(1 - sigma, M + i*sigma) are broken until the remaining stick
drops below the truncation level.  The leftover mass r is not dropped: it is
split between one fresh G-atom (weight r*sqrt(v)) and a diffuse copy of G
(weight r*(1 - sqrt(v))), where v = (1 - sigma)/(M + k*sigma + 1) is the
expected sum of squared weights of the PY(sigma, M + k*sigma) process that the
untruncated tail would have been.  Every functional of the truncated measure
then has exactly the mean and variance of its Pitman-Yor counterpart.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .distributions import GaussianLaw
from .errors import ConfigError, IterationCapError

MAX_STICKS = 10**7
# Batch sampling stops after this many sticks even if the truncation level has
# not been reached (sigma close to 1).  The moment-matched tail keeps the mean
# and variance of every functional exact regardless of where the cut falls.
STICK_BUDGET = 2**16
# upper bound on draws * sticks held in memory per block
BLOCK_CELLS = 2**22


@dataclass(frozen=True)
class PYParams:
    sigma: float
    M: float
    G: GaussianLaw = field(default_factory=lambda: GaussianLaw(1.0, 1.0))

    def __post_init__(self):
        if not 0.0 <= self.sigma < 1.0:
            raise ConfigError(f"sigma must lie in [0, 1), got {self.sigma}")
        if not self.M >= 0.0:
            raise ConfigError(f"M must be nonnegative, got {self.M}")


@dataclass(frozen=True)
class WeightedAtoms:
    """Truncated PY draw: sum_i weights[i] delta_{atoms[i]} + diffuse * base."""

    atoms: np.ndarray
    weights: np.ndarray
    diffuse: float
    base: GaussianLaw
    sticks: np.ndarray
    residual_index: int

    @property
    def total_mass(self) -> float:
        return math.fsum(self.weights) + self.diffuse

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        jump = (self.atoms[:, None] <= np.atleast_1d(t)).T @ self.weights
        return jump.reshape(t.shape) + self.diffuse * self.base.cdf(t)


def tail_square_mass(sigma, theta):
    """E sum_i W_i^2 for PY(sigma, theta): the tie probability (1-sigma)/(1+theta)."""
    return (1.0 - sigma) / (theta + 1.0)


def _beta(rng, a, b, size=None):
    # Beta(a, 0) is the point mass at 1 (sigma = M = 0)
    b = np.asarray(b, dtype=float)
    safe = np.where(b > 0, b, 1.0)
    v = rng.beta(a, safe, size)
    return np.where(b > 0, v, 1.0)


def sample_py(params: PYParams, eps: float, rng, theta=None) -> WeightedAtoms:
    """One truncated draw from PY(sigma, theta, G); theta defaults to M."""
    if not 0.0 < eps < 1.0:
        raise ConfigError(f"truncation level must lie in (0, 1), got {eps}")
    sigma = params.sigma
    theta = params.M if theta is None else float(theta)
    sticks, weights = [], []
    resid = 1.0
    i = 0
    while True:
        i += 1
        v = float(_beta(rng, 1.0 - sigma, theta + i * sigma))
        sticks.append(v)
        weights.append(resid * v)
        resid *= 1.0 - v
        if resid < eps:
            break
        if i >= MAX_STICKS:
            raise IterationCapError(f"{MAX_STICKS} sticks broken without reaching {eps}")
    atoms = list(params.G.sample(rng, i))
    if resid == 0.0:
        # a stick rounded to 1: nothing left over, the last atom is the residual one
        return WeightedAtoms(np.asarray(atoms), np.asarray(weights), 0.0, params.G,
                             np.asarray(sticks), i - 1)
    c = math.sqrt(tail_square_mass(sigma, theta + i * sigma))
    atoms.append(float(params.G.sample(rng)))
    weights.append(resid * c)
    return WeightedAtoms(
        atoms=np.asarray(atoms),
        weights=np.asarray(weights),
        diffuse=resid * (1.0 - c),
        base=params.G,
        sticks=np.asarray(sticks),
        residual_index=i,
    )


def integrate(measure: WeightedAtoms, f) -> float:
    return float(np.dot(measure.weights, f(measure.atoms)) + measure.diffuse * measure.base.integral(f))


def expected_sticks(sigma, theta, threshold):
    """Rough number of sticks until the remaining stick falls below threshold."""
    t = np.clip(np.asarray(threshold, dtype=float), 1e-300, 1.0)
    sigma = np.asarray(sigma, dtype=float)
    theta = np.maximum(np.asarray(theta, dtype=float), 1e-12)
    with np.errstate(divide="ignore", over="ignore"):
        # E log(remaining stick after k) ~ -(1 - sigma)/sigma * log(1 + k sigma/theta)
        poly = theta * (t ** (-sigma / np.maximum(1.0 - sigma, 1e-12)) - 1.0) / np.maximum(sigma, 1e-12)
        geom = np.log(t) / np.log(theta / (theta + 1.0))
    return np.where(sigma > 0, poly, geom)


def py_functional_batch(sigma, theta, threshold, base, evaluator, rng, first_block=None,
                        budget: int | None = STICK_BUDGET):
    """Functional values of independent truncated PY draws, one row per draw.

    ``sigma``, ``theta`` and ``threshold`` are arrays of length D (one entry per
    draw); draw d is truncated once its remaining stick is below threshold[d]
    or after ``budget`` sticks.  With ``budget=None`` only the threshold
    counts, up to MAX_STICKS.  Returns an array of shape (D, evaluator.width).
    """
    sigma = np.asarray(sigma, dtype=float)
    theta = np.asarray(theta, dtype=float)
    threshold = np.asarray(threshold, dtype=float)
    D = sigma.shape[0]
    acc = np.zeros((D, evaluator.width))
    resid = np.ones(D)
    count = np.zeros(D, dtype=np.int64)
    active = np.arange(D)
    if first_block is None:
        guess = np.median(expected_sticks(sigma, theta, threshold)) if D else 1.0
        first_block = int(np.clip(np.ceil(guess), 8, 4096))
    block = first_block
    while active.size:
        block = max(1, min(block, BLOCK_CELLS // active.size))
        if budget is not None:
            block = min(block, max(1, budget - int(count[active].min())))
        s = sigma[active][:, None]
        index = count[active][:, None] + np.arange(1, block + 1)
        V = _beta(rng, 1.0 - s, theta[active][:, None] + index * s, (active.size, block))
        left = resid[active][:, None] * np.cumprod(1.0 - V, axis=1)
        before = np.concatenate([resid[active][:, None], left[:, :-1]], axis=1)
        hit = left < threshold[active][:, None]
        done = hit.any(axis=1)
        stop = np.where(done, hit.argmax(axis=1), block - 1)
        W = V * before * (np.arange(block) <= stop[:, None])
        atoms = base.sample(rng, (active.size, block))
        acc[active] += evaluator.accumulate(W, atoms)
        resid[active] = left[np.arange(active.size), stop]
        count[active] += stop + 1
        if budget is not None:
            done |= count[active] >= budget
        elif count[active].max() >= MAX_STICKS:
            raise IterationCapError(f"{MAX_STICKS} sticks broken without reaching truncation")
        active = active[~done]
        block = min(2 * block, 4096)
    c = np.sqrt(tail_square_mass(sigma, theta + count * sigma))
    fresh = base.sample(rng, D)
    acc += (resid * c)[:, None] * evaluator.values(fresh)
    acc += (resid * (1.0 - c))[:, None] * evaluator.base(base)[None, :]
    return acc
