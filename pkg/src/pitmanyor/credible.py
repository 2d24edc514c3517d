"""Credible intervals for Pf (with the centering correction) and CDF bands."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DegenerateError, InsufficientDrawsError
from .stats import PartitionSummary, ptilde

MIN_DRAWS = 100
S_MIN = 1e-4


def bias(sigma: float, summary: PartitionSummary, G, f) -> float:
    """B_n(f) = (sigma*K/n) * (Gf - mean of f over the distinct values)."""
    return sigma * summary.K / summary.n * (G.integral(f) - ptilde(summary, f))


@dataclass(frozen=True)
class CredibleInterval:
    lo: float
    hi: float
    level: tuple
    corrected: bool
    bias: float

    def contains(self, value: float) -> bool:
        return self.lo <= value <= self.hi

    @property
    def width(self) -> float:
        return self.hi - self.lo


def _check_level(alpha, beta):
    if not 0.0 < alpha < beta < 1.0:
        raise ConfigError(f"need 0 < alpha < beta < 1, got ({alpha}, {beta})")


def interval(pf_draws, alpha: float, beta: float, bias: float = 0.0, corrected: bool = False) -> CredibleInterval:
    """Equal-tailed interval from posterior draws (type-7 empirical quantiles).

    A corrected interval is the plain one shifted by -bias.
    """
    draws = np.asarray(pf_draws, dtype=float).ravel()
    if draws.size < MIN_DRAWS:
        raise InsufficientDrawsError(f"need at least {MIN_DRAWS} draws, got {draws.size}")
    _check_level(alpha, beta)
    lo, hi = np.quantile(draws, [alpha, beta])
    shift = bias if corrected else 0.0
    return CredibleInterval(float(lo - shift), float(hi - shift), (alpha, beta), corrected, float(bias))


def interval_pair(pf_draws, alpha, beta, bias):
    """Uncorrected and corrected intervals sharing one quantile computation."""
    plain = interval(pf_draws, alpha, beta, bias, corrected=False)
    fixed = CredibleInterval(plain.lo - bias, plain.hi - bias, plain.level, True, plain.bias)
    return plain, fixed


@dataclass(frozen=True)
class CredibleBand:
    grid: np.ndarray
    center: np.ndarray
    scale: np.ndarray
    xi: float
    alpha: float
    floored: np.ndarray  # grid points where the scale was raised to s_min

    @property
    def lower(self):
        return self.center - self.xi * self.scale

    @property
    def upper(self):
        return self.center + self.xi * self.scale


def band(cdf_draws, grid, alpha: float, center=None, scale=None, s_min: float = S_MIN,
         floor: bool = True) -> CredibleBand:
    """Simultaneous band center +- xi*scale for a CDF observed on ``grid``.

    ``cdf_draws`` has one row per posterior draw.  xi is the (1 - alpha)
    quantile of sup_t |F(t) - center(t)| / scale(t) over the draws.
    """
    F = np.asarray(cdf_draws, dtype=float)
    grid = np.asarray(grid, dtype=float)
    if F.ndim != 2 or F.shape[1] != grid.size or grid.size == 0:
        raise ConfigError("cdf_draws must be a (draws, grid) matrix matching a nonempty grid")
    if not 0.0 < alpha < 1.0:
        raise ConfigError(f"alpha must lie in (0, 1), got {alpha}")
    if center is None:
        # mean taken relative to the first draw, exact when all draws agree
        center = F[0] + (F - F[0]).mean(axis=0)
    center = np.asarray(center, dtype=float)
    scale = F.std(axis=0, ddof=1) if scale is None else np.asarray(scale, dtype=float)
    low = scale < s_min
    if np.any(low) and not floor:
        raise DegenerateError(f"posterior scale below {s_min} at {int(low.sum())} grid points")
    scale = np.maximum(scale, s_min)
    sup = np.max(np.abs(F - center) / scale, axis=1)
    xi = float(np.quantile(sup, 1.0 - alpha))
    return CredibleBand(grid, center, scale, xi, alpha, low)


def band_covers(b: CredibleBand, F0_on_grid) -> bool:
    F0 = np.asarray(F0_on_grid, dtype=float)
    return bool(np.all((b.lower <= F0) & (F0 <= b.upper)))


def default_grid(summary: PartitionSummary, G=None, base_quantiles: bool = False) -> np.ndarray:
    """Sorted distinct observed values, where the CDF of a discrete truth jumps.

    With ``base_quantiles`` the 1%..99% quantiles of G are added.  Between the
    observed values the posterior CDF moves only through the fresh component,
    whose fluctuations are of order 1/n and far from Gaussian; including such
    points inflates the sup statistic and makes the band conservative.
    """
    points = [summary.distinct]
    if base_quantiles:
        if G is None:
            raise ConfigError("base quantiles requested without a base measure")
        points.append(G.ppf(np.arange(1, 100) / 100.0))
    return np.unique(np.concatenate(points))
