"""True data-generating laws, the Gaussian base measure and test functionals.

Every law exposes ``sample``, ``ppf`` (inverse CDF), ``cdf`` and the closed-form
integrals ``integral(f)`` / ``integral_sq(f)`` for the four functional variants.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Union

import numpy as np
from scipy.special import ndtr

from .errors import ConfigError, DivergentMomentError

# Atoms 1..CACHE_SIZE of a power law are inverted from a precomputed table.
CACHE_SIZE = 10**6


# ---------------------------------------------------------------------------
# Functionals
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IndicatorAbove:
    """f = 1_{[a, inf)}."""

    a: float

    def __call__(self, x):
        return (np.asarray(x, dtype=float) >= self.a).astype(float)

    def to_spec(self):
        return {"kind": "above", "a": self.a}


@dataclass(frozen=True)
class TwoSided:
    """f = 1_{(a, inf)} - 1_{(-inf, a]}."""

    a: float

    def __call__(self, x):
        return np.where(np.asarray(x, dtype=float) > self.a, 1.0, -1.0)

    def to_spec(self):
        return {"kind": "two_sided", "a": self.a}


@dataclass(frozen=True)
class IndicatorInterval:
    """f = 1_{(a, b]}."""

    a: float
    b: float

    def __post_init__(self):
        if not self.a < self.b:
            raise ConfigError(f"IndicatorInterval needs a < b, got ({self.a}, {self.b})")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return ((x > self.a) & (x <= self.b)).astype(float)

    def to_spec(self):
        return {"kind": "interval", "a": self.a, "b": self.b}


@dataclass(frozen=True)
class Identity:
    """f(x) = x."""

    def __call__(self, x):
        return np.asarray(x, dtype=float) * 1.0

    def to_spec(self):
        return {"kind": "identity"}


Functional = Union[IndicatorAbove, TwoSided, IndicatorInterval, Identity]


def functional_from_spec(spec) -> Functional:
    if isinstance(spec, str):
        spec = json.loads(spec)
    try:
        kind = spec["kind"]
        if kind == "above":
            return IndicatorAbove(float(spec["a"]))
        if kind == "two_sided":
            return TwoSided(float(spec["a"]))
        if kind == "interval":
            return IndicatorInterval(float(spec["a"]), float(spec["b"]))
        if kind == "identity":
            return Identity()
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"malformed functional spec {spec!r}") from exc
    raise ConfigError(f"unknown functional kind {kind!r}")


# ---------------------------------------------------------------------------
# Zeta sums
# ---------------------------------------------------------------------------


def zeta_tail(alpha, k):
    """Euler-Maclaurin approximation of sum_{j>k} j^-alpha, accurate for k >= 1e4."""
    k = np.asarray(k, dtype=float)
    return k ** (1 - alpha) / (alpha - 1) - 0.5 * k**-alpha + alpha * k ** (-alpha - 1) / 12


@lru_cache(maxsize=16)
def _suffix_table(alpha: float) -> np.ndarray:
    # T[k] = sum_{j>k} j^-alpha for k = 0..CACHE_SIZE
    j = np.arange(1, CACHE_SIZE + 1, dtype=float)
    terms = j**-alpha
    T = np.empty(CACHE_SIZE + 1)
    T[CACHE_SIZE] = float(zeta_tail(alpha, CACHE_SIZE))
    T[:CACHE_SIZE] = np.cumsum(terms[::-1])[::-1] + T[CACHE_SIZE]
    T.flags.writeable = False
    return T


def zeta(s: float) -> float:
    """Riemann zeta for s > 1 (partial sum to 1e6 plus tail expansion)."""
    if s <= 1:
        raise DivergentMomentError(f"zeta({s}) diverges")
    j = np.arange(1, CACHE_SIZE + 1, dtype=float)
    return float(np.sum(j**-s) + zeta_tail(s, CACHE_SIZE))


# ---------------------------------------------------------------------------
# Laws
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GaussianLaw:
    mean: float = 0.0
    var: float = 1.0

    def __post_init__(self):
        if not self.var > 0:
            raise ConfigError("GaussianLaw variance must be positive")

    @property
    def sd(self):
        return math.sqrt(self.var)

    def sample(self, rng, size=None):
        return rng.normal(self.mean, self.sd, size)

    def ppf(self, u):
        from scipy.special import ndtri

        return self.mean + self.sd * ndtri(u)

    def cdf(self, t):
        return ndtr((np.asarray(t, dtype=float) - self.mean) / self.sd)

    def integral(self, f: Functional) -> float:
        if isinstance(f, Identity):
            return self.mean
        if isinstance(f, IndicatorAbove):
            return float(1.0 - self.cdf(f.a))
        if isinstance(f, TwoSided):
            return float(1.0 - 2.0 * self.cdf(f.a))
        if isinstance(f, IndicatorInterval):
            return float(self.cdf(f.b) - self.cdf(f.a))
        raise TypeError(f"unsupported functional {f!r}")

    def integral_sq(self, f: Functional) -> float:
        if isinstance(f, Identity):
            return self.mean**2 + self.var
        if isinstance(f, TwoSided):
            return 1.0
        return self.integral(f)

    def to_spec(self):
        return {"kind": "gaussian", "mean": self.mean, "var": self.var}


class FiniteTable:
    """Discrete law with finitely many atoms."""

    def __init__(self, atoms, name=None):
        pairs = [(float(v), float(w)) for v, w in atoms]
        if not pairs:
            raise ConfigError("FiniteTable needs at least one atom")
        values = np.array([v for v, _ in pairs])
        weights = np.array([w for _, w in pairs])
        if np.any(weights <= 0):
            raise ConfigError("FiniteTable weights must be strictly positive")
        if abs(math.fsum(weights) - 1.0) > 1e-12:
            raise ConfigError(f"FiniteTable weights sum to {math.fsum(weights)!r}, not 1")
        if len(np.unique(values)) != len(values):
            raise ConfigError("FiniteTable atom values must be distinct")
        order = np.argsort(values, kind="stable")
        self.values = values[order]
        self.weights = weights[order]
        self._cum = np.cumsum(self.weights)
        self._cum[-1] = 1.0
        self.name = name or "finite"
        self._spec = [[v, w] for v, w in pairs]

    def __repr__(self):
        return f"FiniteTable({self._spec!r})"

    def ppf(self, u):
        idx = np.searchsorted(self._cum, np.asarray(u, dtype=float), side="left")
        return self.values[np.minimum(idx, len(self.values) - 1)]

    def sample(self, rng, size=None):
        return self.ppf(rng.random(size))

    def cdf(self, t):
        idx = np.searchsorted(self.values, np.asarray(t, dtype=float), side="right")
        return np.where(idx > 0, self._cum[np.maximum(idx - 1, 0)], 0.0)

    def integral(self, f: Functional) -> float:
        return math.fsum(self.weights * f(self.values))

    def integral_sq(self, f: Functional) -> float:
        return math.fsum(self.weights * f(self.values) ** 2)

    def alpha0(self, u: float) -> int:
        return int(np.count_nonzero(1.0 / self.weights <= u * (1 + 1e-12)))

    def to_spec(self):
        return {"kind": "finite", "atoms": self._spec}


class PowerLaw:
    """Law on {1, 2, ...} with P{j} = c j^-alpha, c = 1/zeta(alpha)."""

    def __init__(self, alpha: float, name=None):
        if not alpha > 1:
            raise ConfigError("PowerLaw exponent must exceed 1")
        self.alpha = float(alpha)
        self._T = _suffix_table(self.alpha)
        self.c = 1.0 / self._T[0]
        self._neg_tail = -self.c * self._T  # increasing, for searchsorted
        self.name = name or f"powerlaw({self.alpha:g})"

    def __repr__(self):
        return f"PowerLaw(alpha={self.alpha!r})"

    def tail_mass(self, k):
        """P(X > k) for integer k >= 0 (vectorized)."""
        k = np.asarray(k, dtype=float)
        inside = k <= CACHE_SIZE
        out = np.empty(k.shape)
        out[inside] = self.c * self._T[k[inside].astype(np.int64)]
        out[~inside] = self.c * zeta_tail(self.alpha, k[~inside])
        return out

    def pmf(self, j):
        return self.c * np.asarray(j, dtype=float) ** -self.alpha

    def ppf(self, u):
        """Smallest k with CDF(k) >= u."""
        u = np.atleast_1d(np.asarray(u, dtype=float))
        v = 1.0 - u
        k = np.searchsorted(self._neg_tail, -v, side="left").astype(float)
        k = np.maximum(k, 1.0)
        far = k > CACHE_SIZE
        if np.any(far):
            k[far] = self._invert_tail(v[far])
        return k

    def _invert_tail(self, v):
        target = v / self.c
        lo = np.full(v.shape, float(CACHE_SIZE))
        hi = np.full(v.shape, 2.0 * CACHE_SIZE)
        cap = 2.0**53
        while True:
            grow = (zeta_tail(self.alpha, hi) > target) & (hi < cap)
            if not grow.any():
                break
            lo[grow] = hi[grow]
            hi[grow] = np.minimum(hi[grow] * 2.0, cap)
        # invariant: T(lo) > target >= T(hi)
        while True:
            gap = hi - lo > 1
            if not gap.any():
                return hi
            mid = np.floor((lo + hi) / 2)
            below = zeta_tail(self.alpha, mid) <= target
            hi = np.where(gap & below, mid, hi)
            lo = np.where(gap & ~below, mid, lo)

    def sample(self, rng, size=None):
        out = self.ppf(rng.random(size))
        return out if size is not None else float(out[0])

    def cdf(self, t):
        k = np.floor(np.asarray(t, dtype=float))
        return np.where(k >= 1, 1.0 - self.tail_mass(np.maximum(k, 0)), 0.0)

    def _above(self, a):
        # P(X >= a)
        return float(self.tail_mass(max(math.ceil(a) - 1, 0)))

    def _greater(self, a):
        return float(self.tail_mass(max(math.floor(a), 0)))

    def integral(self, f: Functional) -> float:
        if isinstance(f, IndicatorAbove):
            return self._above(f.a)
        if isinstance(f, TwoSided):
            return 2.0 * self._greater(f.a) - 1.0
        if isinstance(f, IndicatorInterval):
            return self._greater(f.a) - self._greater(f.b)
        if isinstance(f, Identity):
            if self.alpha <= 2:
                raise DivergentMomentError(f"mean of power law with alpha={self.alpha} is infinite")
            return self.c * zeta(self.alpha - 1)
        raise TypeError(f"unsupported functional {f!r}")

    def integral_sq(self, f: Functional) -> float:
        if isinstance(f, Identity):
            if self.alpha <= 3:
                raise DivergentMomentError(
                    f"second moment of power law with alpha={self.alpha} is infinite"
                )
            return self.c * zeta(self.alpha - 2)
        if isinstance(f, TwoSided):
            return 1.0
        return self.integral(f)

    def alpha0(self, u: float) -> int:
        """#{j : 1/P{j} <= u}."""
        if u < 1:
            return 0
        k = int(math.floor((self.c * u) ** (1.0 / self.alpha)))
        limit = u * (1 + 1e-12)
        while (k + 1) ** self.alpha / self.c <= limit:
            k += 1
        while k > 0 and k**self.alpha / self.c > limit:
            k -= 1
        return k

    def to_spec(self):
        return {"kind": "powerlaw", "alpha": self.alpha}


AtomicLaw = Union[FiniteTable, PowerLaw]


class P0Decomposition:
    """P0 = (1 - lam) * discrete + lam * continuous."""

    def __init__(self, lam: float, discrete=None, continuous=None, name=None):
        if not 0.0 <= lam <= 1.0:
            raise ConfigError("lambda must lie in [0, 1]")
        if lam < 1 and discrete is None:
            raise ConfigError("discrete part required when lambda < 1")
        if lam > 0 and continuous is None:
            raise ConfigError("continuous part required when lambda > 0")
        self.lam = float(lam)
        self.discrete = discrete
        self.continuous = continuous
        self.name = name or "mixture"

    def _parts(self):
        if self.discrete is not None and self.lam < 1:
            yield 1.0 - self.lam, self.discrete
        if self.continuous is not None and self.lam > 0:
            yield self.lam, self.continuous

    def sample(self, rng, size=None):
        m = 1 if size is None else int(np.prod(size))
        pick = rng.random(m) < self.lam
        out = np.empty(m)
        if self.discrete is not None:
            out[~pick] = np.asarray(self.discrete.sample(rng, int((~pick).sum())))
        if self.continuous is not None:
            out[pick] = self.continuous.sample(rng, int(pick.sum()))
        return out.reshape(size) if size is not None else float(out[0])

    def cdf(self, t):
        return sum(w * law.cdf(t) for w, law in self._parts())

    def integral(self, f):
        return sum(w * law.integral(f) for w, law in self._parts())

    def integral_sq(self, f):
        return sum(w * law.integral_sq(f) for w, law in self._parts())

    def to_spec(self):
        spec = {"kind": "mixture", "lambda": self.lam}
        if self.discrete is not None:
            spec["discrete"] = self.discrete.to_spec()
        if self.continuous is not None:
            spec["continuous"] = self.continuous.to_spec()
        return spec


# Laws of the numerical study.
P1_ATOMS = [(1, 0.1), (2, 0.1), (3, 0.2), (4, 0.2), (5, 0.3), (6, 0.1)]


def named_law(name: str):
    if name == "P1":
        return FiniteTable(P1_ATOMS, name="P1")
    if name == "P2":
        return PowerLaw(2.0, name="P2")
    if name == "P3":
        return PowerLaw(1.5, name="P3")
    raise ConfigError(f"unknown law alias {name!r}")


def law_from_spec(spec):
    """Build a law from its JSON description or one of the aliases P1, P2, P3."""
    if isinstance(spec, str):
        spec = spec.strip()
        if spec in ("P1", "P2", "P3"):
            return named_law(spec)
        try:
            spec = json.loads(spec)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"cannot parse law spec {spec!r}") from exc
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError(f"law spec must be an object with a 'kind', got {spec!r}")
    kind = spec["kind"]
    name = spec.get("name")
    try:
        if kind == "finite":
            return FiniteTable(spec["atoms"], name=name)
        if kind == "powerlaw":
            return PowerLaw(float(spec["alpha"]), name=name)
        if kind == "gaussian":
            return GaussianLaw(float(spec.get("mean", 0.0)), float(spec.get("var", 1.0)))
        if kind == "mixture":
            disc = spec.get("discrete")
            cont = spec.get("continuous")
            return P0Decomposition(
                float(spec["lambda"]),
                law_from_spec(disc) if disc is not None else None,
                law_from_spec(cont) if cont is not None else None,
                name=name,
            )
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"malformed law spec {spec!r}") from exc
    raise ConfigError(f"unknown law kind {kind!r}")


def law_name(law) -> str:
    return getattr(law, "name", None) or type(law).__name__


def integral(law, f: Functional) -> float:
    return law.integral(f)


def integral_sq(law, f: Functional) -> float:
    return law.integral_sq(f)


def alpha0(law: AtomicLaw, u: float) -> int:
    return law.alpha0(u)
