"""Monte Carlo harness: coverage tables, posterior densities, CDF bands,
occupancy asymptotics and sigma estimation.

Each experiment is a set of independent replications indexed by
(law, n, r).  Replication r draws everything from its own generator
``replication_rng(master_seed, law_id, n, r)``, and aggregation walks the
results in index order, so the output is byte-identical whatever the number of
worker processes.
"""
from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from . import __version__
from .credible import band, band_covers, bias, default_grid, interval_pair
from .distributions import GaussianLaw, functional_from_spec, law_from_spec, law_name
from .errors import ConfigError
from .evaluators import CdfGrid
from .posterior import default_eps, posterior_mean_exact, posterior_samples, posterior_variance_exact
from .seeding import law_id, replication_rng
from .sigma import INTERIOR, LOWER, UPPER, mle_sigma, sigma_posterior
from .stats import ptilde, summarize
from .stickbreaking import PYParams

SIGMA_MODES = ("fixed", "empirical_bayes", "full_bayes")
BAND_GRIDS = ("observed", "observed+base")
# an empirical-Bayes estimate of 1 (no ties) is pulled just inside [0, 1)
SIGMA_CAP = 1.0 - 1e-6

PRESETS = {
    "desk": {"replications": 2000, "posterior_draws": 2000, "sample_sizes": [1000]},
    "full": {"replications": 10000, "posterior_draws": 2000,
              "sample_sizes": [10, 100, 1000, 10000, 100000]},
    "full-density": {"posterior_draws": 100000, "sample_sizes": [10, 100, 1000, 10000, 100000]},
}


def _canonical_law(spec):
    law = law_from_spec(spec)
    out = law.to_spec()
    if getattr(law, "name", None):
        out["name"] = law.name
    return out


@dataclass(frozen=True)
class ExperimentConfig:
    laws: tuple = ("P1",)
    sigma: float = 0.5
    M: float = 1.0
    G: dict = field(default_factory=lambda: {"kind": "gaussian", "mean": 1.0, "var": 1.0})
    f: dict = field(default_factory=lambda: {"kind": "above", "a": 2.0})
    sample_sizes: tuple = (1000,)
    replications: int = 2000
    posterior_draws: int = 2000
    level: tuple = (0.025, 0.975)
    master_seed: int = 0
    sigma_mode: str = "fixed"
    output_path: str | None = None
    truncation: float = 1.0
    sigma_grid: int = 1024
    band_alpha: float = 0.025
    band_grid: str = "observed"

    def __post_init__(self):
        laws = self.laws
        if isinstance(laws, (str, dict)):
            laws = (laws,)
        object.__setattr__(self, "laws", tuple(_canonical_law(s) for s in laws))
        object.__setattr__(self, "sample_sizes", tuple(int(n) for n in self.sample_sizes))
        object.__setattr__(self, "level", tuple(float(x) for x in self.level))
        if not self.laws:
            raise ConfigError("at least one law is required")
        if self.replications < 1:
            raise ConfigError("replications must be >= 1")
        if self.posterior_draws < 100:
            raise ConfigError("posterior_draws must be >= 100")
        if not self.sample_sizes or min(self.sample_sizes) < 1:
            raise ConfigError("sample sizes must be >= 1")
        if self.sigma_mode not in SIGMA_MODES:
            raise ConfigError(f"sigma_mode must be one of {SIGMA_MODES}")
        if len(self.level) != 2 or not 0 < self.level[0] < self.level[1] < 1:
            raise ConfigError(f"level must be (alpha, beta) with 0 < alpha < beta < 1, got {self.level}")
        if not 0 < self.truncation < math.sqrt(min(self.sample_sizes)):
            raise ConfigError("truncation factor must be positive and below sqrt(n)")
        if self.band_grid not in BAND_GRIDS:
            raise ConfigError(f"band_grid must be one of {BAND_GRIDS}")
        if not 0 < self.band_alpha < 0.5:
            raise ConfigError("band_alpha must lie in (0, 0.5)")
        if not 0 <= int(self.master_seed) < 2**64:
            raise ConfigError("master_seed must be an unsigned 64-bit integer")
        # fail early on bad parameter values
        PYParams(self.sigma, self.M, self.base)
        functional_from_spec(self.f)

    @property
    def base(self) -> GaussianLaw:
        g = law_from_spec(self.G)
        if not isinstance(g, GaussianLaw):
            raise ConfigError("the base measure G must be Gaussian")
        return g

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        preset = data.pop("preset", None)
        if preset is not None:
            if preset not in PRESETS:
                raise ConfigError(f"unknown preset {preset!r}")
            data = {**PRESETS[preset], **data}
        if "law" in data:
            if "laws" in data:
                raise ConfigError("give either 'law' or 'laws', not both")
            data["laws"] = data.pop("law")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**data)
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(data)

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["laws"] = list(self.laws)
        out["sample_sizes"] = list(self.sample_sizes)
        out["level"] = list(self.level)
        return out


def as_config(config) -> ExperimentConfig:
    if isinstance(config, ExperimentConfig):
        return config
    if isinstance(config, dict):
        return ExperimentConfig.from_dict(config)
    raise ConfigError(f"expected an ExperimentConfig or dict, got {type(config).__name__}")


# ---------------------------------------------------------------------------
# parallel map in replication order
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _law(spec_json: str):
    return law_from_spec(json.loads(spec_json))


def _resolve(cfg: ExperimentConfig, li: int):
    spec = cfg.laws[li]
    return _law(json.dumps(spec, sort_keys=True)), law_id(spec)


def _map(fn, tasks, threads: int):
    if threads <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    workers = min(threads, len(tasks))
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, tasks, chunksize=max(1, len(tasks) // (4 * workers))))


def _tasks(cfg: ExperimentConfig, reps=None):
    reps = cfg.replications if reps is None else reps
    return [(cfg, li, n, r) for li in range(len(cfg.laws)) for n in cfg.sample_sizes for r in range(reps)]


def _groups(cfg, results, reps=None):
    """Yield (law, n, results for that cell) in config order."""
    reps = cfg.replications if reps is None else reps
    i = 0
    for li in range(len(cfg.laws)):
        law, _ = _resolve(cfg, li)
        for n in cfg.sample_sizes:
            yield law, n, results[i:i + reps]
            i += reps


def _mean_sd(values):
    a = np.asarray(values, dtype=float)
    sd = float(a.std(ddof=1)) if a.size > 1 else 0.0
    return float(a.mean()), sd


def posterior_sigma(cfg, summary, rng):
    """Type parameter for the posterior: the point value used for the bias and,
    in full-Bayes mode, one sigma per posterior draw."""
    if cfg.sigma_mode == "empirical_bayes":
        return min(mle_sigma(summary, cfg.M).sigma_hat, SIGMA_CAP), None
    if cfg.sigma_mode == "full_bayes":
        post = sigma_posterior(summary, cfg.M, grid_size=cfg.sigma_grid)
        return post.mean, post.sample(rng, cfg.posterior_draws)
    return cfg.sigma, None


# ---------------------------------------------------------------------------
# coverage of credible intervals
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CoverageRow:
    law: str
    n: int
    replications: int
    coverage_uncorrected: float
    coverage_corrected: float
    mc_standard_error: float
    mc_standard_error_corrected: float
    mean_bias: float
    mean_sqrt_n_bias: float
    mean_Kn: float
    mean_sigma: float


def _coverage_rep(task):
    cfg, li, n, r = task
    law, lid = _resolve(cfg, li)
    rng = replication_rng(cfg.master_seed, lid, n, r)
    G, f = cfg.base, functional_from_spec(cfg.f)
    summary = summarize(law.sample(rng, n))
    sigma, sigmas = posterior_sigma(cfg, summary, rng)
    params = PYParams(sigma, cfg.M, G)
    draws = posterior_samples(params, summary, f, cfg.posterior_draws, rng,
                              eps=default_eps(n, cfg.truncation), sigmas=sigmas)[:, 0]
    b = bias(sigma, summary, G, f)
    plain, fixed = interval_pair(draws, cfg.level[0], cfg.level[1], b)
    truth = law.integral(f)
    return plain.contains(truth), fixed.contains(truth), b, summary.K, sigma


def run_coverage(config, threads: int = 1) -> list:
    cfg = as_config(config)
    results = _map(_coverage_rep, _tasks(cfg), threads)
    rows = []
    for law, n, cell in _groups(cfg, results):
        R = len(cell)
        pu = sum(c[0] for c in cell) / R
        pc = sum(c[1] for c in cell) / R
        b = np.array([c[2] for c in cell])
        rows.append(CoverageRow(
            law=law_name(law), n=n, replications=R,
            coverage_uncorrected=pu, coverage_corrected=pc,
            mc_standard_error=math.sqrt(pu * (1 - pu) / R),
            mc_standard_error_corrected=math.sqrt(pc * (1 - pc) / R),
            mean_bias=float(b.mean()), mean_sqrt_n_bias=float(b.mean() * math.sqrt(n)),
            mean_Kn=float(np.mean([c[3] for c in cell])),
            mean_sigma=float(np.mean([c[4] for c in cell])),
        ))
    return rows


# ---------------------------------------------------------------------------
# posterior draws for density plots
# ---------------------------------------------------------------------------


def _density_task(task):
    cfg, li, n, _ = task
    law, lid = _resolve(cfg, li)
    rng = replication_rng(cfg.master_seed, lid, n, 0)
    G, f = cfg.base, functional_from_spec(cfg.f)
    summary = summarize(law.sample(rng, n))
    sigma, sigmas = posterior_sigma(cfg, summary, rng)
    params = PYParams(sigma, cfg.M, G)
    draws = posterior_samples(params, summary, f, cfg.posterior_draws, rng,
                              eps=default_eps(n, cfg.truncation), sigmas=sigmas)[:, 0]
    meta = {
        "law": law_name(law), "n": n, "K": summary.K, "sigma": sigma,
        "true_value": law.integral(f),
        "empirical": float(np.mean(f(summary.distinct).repeat(summary.mult))),
        "bias": bias(sigma, summary, G, f),
    }
    if cfg.sigma_mode != "full_bayes":
        meta["exact_mean"] = posterior_mean_exact(params, summary, f)
        meta["exact_variance"] = posterior_variance_exact(params, summary, f)
    return draws, meta


def run_density(config, threads: int = 1):
    """Raw posterior draws of Pf, one column per (law, n); no smoothing.

    Returns ``(matrix, columns, metadata)`` with ``matrix`` of shape
    (posterior_draws, number of columns).
    """
    cfg = as_config(config)
    results = _map(_density_task, _tasks(cfg, reps=1), threads)
    columns = [f"{m['law']}_n{m['n']}" for _, m in results]
    matrix = np.column_stack([d for d, _ in results])
    return matrix, columns, {c: m for c, (_, m) in zip(columns, results)}


# ---------------------------------------------------------------------------
# simultaneous CDF bands
# ---------------------------------------------------------------------------


def _band_rep(task):
    cfg, li, n, r = task
    law, lid = _resolve(cfg, li)
    rng = replication_rng(cfg.master_seed, lid, n, r)
    G = cfg.base
    summary = summarize(law.sample(rng, n))
    sigma, sigmas = posterior_sigma(cfg, summary, rng)
    grid = default_grid(summary, G, base_quantiles=cfg.band_grid == "observed+base")
    F = posterior_samples(PYParams(sigma, cfg.M, G), summary, CdfGrid(grid), cfg.posterior_draws, rng,
                          eps=default_eps(n, cfg.truncation), sigmas=sigmas)
    b = band(F, grid, cfg.band_alpha)
    return band_covers(b, law.cdf(grid)), b.xi, int(b.floored.sum()), grid.size


def run_band_coverage(config, threads: int = 1) -> list:
    cfg = as_config(config)
    results = _map(_band_rep, _tasks(cfg), threads)
    rows = []
    for law, n, cell in _groups(cfg, results):
        R = len(cell)
        p = sum(c[0] for c in cell) / R
        rows.append({
            "law": law_name(law), "n": n, "replications": R, "alpha": cfg.band_alpha,
            "coverage": p, "mc_standard_error": math.sqrt(p * (1 - p) / R),
            "mean_xi": float(np.mean([c[1] for c in cell])),
            "mean_floored_points": float(np.mean([c[2] for c in cell])),
            "mean_grid_size": float(np.mean([c[3] for c in cell])),
        })
    return rows


# ---------------------------------------------------------------------------
# occupancy counts and the centering term
# ---------------------------------------------------------------------------


def _occupancy_rep(task):
    cfg, li, n, r = task
    law, lid = _resolve(cfg, li)
    rng = replication_rng(cfg.master_seed, lid, n, r)
    f = functional_from_spec(cfg.f)
    summary = summarize(law.sample(rng, n))
    b = bias(cfg.sigma, summary, cfg.base, f)
    return summary.K, ptilde(summary, f), math.sqrt(n) * b


def run_occupancy(config, threads: int = 1) -> list:
    cfg = as_config(config)
    results = _map(_occupancy_rep, _tasks(cfg), threads)
    rows = []
    for law, n, cell in _groups(cfg, results):
        K = np.array([c[0] for c in cell], dtype=float)
        a0 = law.alpha0(n) if hasattr(law, "alpha0") else math.nan
        row = {"law": law_name(law), "n": n, "replications": len(cell), "alpha0_n": a0}
        for name, vals in (("Kn", K), ("Kn_over_sqrt_n", K / math.sqrt(n)),
                           ("Kn_over_alpha0", K / a0 if a0 else K * math.nan),
                           ("ptilde", [c[1] for c in cell]), ("sqrt_n_bias", [c[2] for c in cell])):
            row[f"mean_{name}"], row[f"sd_{name}"] = _mean_sd(vals)
        row["min_Kn"], row["max_Kn"] = int(K.min()), int(K.max())
        rows.append(row)
    return rows


# ---------------------------------------------------------------------------
# estimation of the type parameter
# ---------------------------------------------------------------------------


def _sigma_rep(task):
    cfg, li, n, r = task
    law, lid = _resolve(cfg, li)
    rng = replication_rng(cfg.master_seed, lid, n, r)
    summary = summarize(law.sample(rng, n))
    fit = mle_sigma(summary, cfg.M)
    post = sigma_posterior(summary, cfg.M, grid_size=cfg.sigma_grid)
    q05, q95 = post.quantile([0.05, 0.95])
    return fit.sigma_hat, fit.at_boundary, post.mean, float(q05), float(q95)


def run_sigma_study(config, threads: int = 1) -> list:
    cfg = as_config(config)
    results = _map(_sigma_rep, _tasks(cfg), threads)
    rows = []
    for law, n, cell in _groups(cfg, results):
        R = len(cell)
        row = {"law": law_name(law), "n": n, "replications": R}
        row["mean_sigma_hat"], row["sd_sigma_hat"] = _mean_sd([c[0] for c in cell])
        row["frac_lower"] = sum(c[1] == LOWER for c in cell) / R
        row["frac_interior"] = sum(c[1] == INTERIOR for c in cell) / R
        row["frac_upper"] = sum(c[1] == UPPER for c in cell) / R
        row["mean_post_mean"], row["sd_post_mean"] = _mean_sd([c[2] for c in cell])
        row["mean_post_q05"] = float(np.mean([c[3] for c in cell]))
        row["mean_post_q95"] = float(np.mean([c[4] for c in cell]))
        rows.append(row)
    return rows


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def rows_to_csv(rows) -> str:
    """Render rows (dataclasses or dicts with equal keys) as CSV text."""
    dicts = [dataclasses.asdict(r) if dataclasses.is_dataclass(r) else dict(r) for r in rows]
    buf = io.StringIO()
    if not dicts:
        return ""
    writer = csv.writer(buf, lineterminator="\n")
    header = list(dicts[0])
    writer.writerow(header)
    for d in dicts:
        writer.writerow([_cell(d[k]) for k in header])
    return buf.getvalue()


def matrix_to_csv(matrix, columns) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in np.asarray(matrix):
        writer.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


def sidecar_path(path) -> Path:
    return Path(str(path) + ".json")


def write_output(text: str, path, experiment: str, config: ExperimentConfig | dict | None, extra=None):
    """Write the CSV and a JSON sidecar with the resolved config and version."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    meta = {"experiment": experiment, "version": __version__}
    if config is not None:
        meta["config"] = config.to_dict() if isinstance(config, ExperimentConfig) else config
    if extra:
        meta.update(extra)
    sidecar_path(path).write_text(json.dumps(meta, indent=2, sort_keys=True, default=_jsonable) + "\n")


def _jsonable(v):
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    raise TypeError(f"cannot serialize {type(v).__name__}")
