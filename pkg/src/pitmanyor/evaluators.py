"""Batched evaluation of functionals of random discrete measures.

An evaluator maps a block of weighted atoms (``weights`` and ``atoms`` of shape
``(draws, sticks)``) to one row of functional values per draw.  Two families
are needed: a handful of arbitrary functionals, and a CDF on a grid.
"""
from __future__ import annotations

import numpy as np


class FunctionalSet:
    def __init__(self, functionals):
        self.functionals = list(functionals)
        if not self.functionals:
            raise ValueError("need at least one functional")

    @property
    def width(self) -> int:
        return len(self.functionals)

    def values(self, x):
        x = np.asarray(x, dtype=float)
        return np.stack([f(x) for f in self.functionals], axis=-1)

    def base(self, law):
        return np.array([law.integral(f) for f in self.functionals])

    def accumulate(self, weights, atoms):
        if self.width == 1:
            return (weights * self.functionals[0](atoms)).sum(axis=1)[:, None]
        return np.einsum("db,dbj->dj", weights, self.values(atoms))


class CdfGrid:
    """F(t) = P(-inf, t] on a strictly increasing grid of t values."""

    def __init__(self, grid):
        grid = np.asarray(grid, dtype=float)
        if grid.ndim != 1 or grid.size == 0:
            raise ValueError("grid must be a nonempty 1-d array")
        if np.any(np.diff(grid) <= 0):
            raise ValueError("grid must be strictly increasing")
        self.grid = grid

    @property
    def width(self) -> int:
        return self.grid.size

    def values(self, x):
        x = np.asarray(x, dtype=float)
        return (x[..., None] <= self.grid).astype(float)

    def base(self, law):
        return np.asarray(law.cdf(self.grid), dtype=float)

    def accumulate(self, weights, atoms):
        D, J = weights.shape[0], self.width
        # an atom at x contributes to every t_j >= x, i.e. j >= first index with grid >= x
        first = np.searchsorted(self.grid, atoms, side="left")
        flat = (np.arange(D)[:, None] * (J + 1) + first).ravel()
        jumps = np.bincount(flat, weights=weights.ravel(), minlength=D * (J + 1))
        return np.cumsum(jumps.reshape(D, J + 1), axis=1)[:, :J]


def as_evaluator(target):
    """Accept an evaluator, a single functional or a list of functionals."""
    if hasattr(target, "accumulate"):
        return target
    if callable(target):
        return FunctionalSet([target])
    return FunctionalSet(target)
