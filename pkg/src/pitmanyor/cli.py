"""Command-line entry point: ``pitmanyor <command> [options]``.

Exit status is 0 on success, 2 for configuration or input errors and 3 for
numerical or domain errors.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from . import __version__
from .credible import bias, interval_pair
from .distributions import functional_from_spec
from .errors import ConfigError, DomainError
from .experiments import (
    ExperimentConfig,
    PRESETS,
    matrix_to_csv,
    rows_to_csv,
    run_band_coverage,
    run_coverage,
    run_density,
    run_occupancy,
    run_sigma_study,
    write_output,
    posterior_sigma,
)
from .posterior import default_eps, posterior_mean_exact, posterior_samples, posterior_variance_exact
from .seeding import stream
from .sigma import mle_sigma, sigma_posterior
from .stats import read_dataset_csv, summarize
from .stickbreaking import PYParams, sample_py

log = logging.getLogger("pitmanyor")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


def _load_config(args) -> ExperimentConfig:
    data = {}
    if args.config:
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
    if getattr(args, "preset", None):
        data.setdefault("preset", args.preset)
    if args.seed is not None:
        data["master_seed"] = args.seed
    if args.out is not None:
        data["output_path"] = args.out
    return ExperimentConfig.from_dict(data)


def _emit(text: str, args, experiment: str, config, extra=None):
    path = args.out or (config.output_path if isinstance(config, ExperimentConfig) else None)
    if path:
        write_output(text, path, experiment, config, extra)
        log.info("wrote %s", path)
    else:
        sys.stdout.write(text)


def _table(runner, name):
    def command(args):
        cfg = _load_config(args)
        rows = runner(cfg, threads=args.threads)
        _emit(rows_to_csv(rows), args, name, cfg)
    return command


def cmd_density(args):
    cfg = _load_config(args)
    matrix, columns, meta = run_density(cfg, threads=args.threads)
    _emit(matrix_to_csv(matrix, columns), args, "density", cfg, {"columns": meta})


def _dataset(args):
    if not args.data:
        raise ConfigError("--data is required")
    try:
        return read_dataset_csv(args.data)
    except OSError as exc:
        raise ConfigError(f"cannot read dataset {args.data}: {exc}") from exc


def cmd_fit_sigma(args):
    cfg = _load_config(args)
    summary = summarize(_dataset(args))
    M = cfg.M if args.M is None else args.M
    fit = mle_sigma(summary, M)
    post = sigma_posterior(summary, M, grid_size=args.grid_size)
    q05, q95 = post.quantile([0.05, 0.95])
    result = {
        "sigma_hat": fit.sigma_hat,
        "boundary": fit.at_boundary,
        "score_at_hat": fit.score_at_hat if np.isfinite(fit.score_at_hat) else str(fit.score_at_hat),
        "posterior_mean": post.mean,
        "posterior_q05": float(q05),
        "posterior_q95": float(q95),
        "n": summary.n,
        "K": summary.K,
        "M": M,
    }
    text = json.dumps(result, indent=2) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_sample_prior(args):
    cfg = _load_config(args)
    params = PYParams(cfg.sigma, cfg.M, cfg.base)
    rng = stream(cfg.master_seed, 0)
    lines = ["draw,kind,atom,weight"]
    for d in range(args.count):
        m = sample_py(params, args.eps, rng)
        for i, (a, w) in enumerate(zip(m.atoms, m.weights)):
            kind = "residual" if i == m.residual_index else "atom"
            lines.append(f"{d},{kind},{float(a)!r},{float(w)!r}")
        lines.append(f"{d},diffuse,,{float(m.diffuse)!r}")
    _emit("\n".join(lines) + "\n", args, "sample-prior", cfg, {"eps": args.eps, "count": args.count})


def cmd_posterior_draws(args):
    cfg = _load_config(args)
    summary = summarize(_dataset(args))
    rng = stream(cfg.master_seed, summary.n)
    G, f = cfg.base, functional_from_spec(cfg.f)
    sigma, sigmas = posterior_sigma(cfg, summary, rng)
    params = PYParams(sigma, cfg.M, G)
    draws = posterior_samples(params, summary, f, cfg.posterior_draws, rng,
                              eps=default_eps(summary.n, cfg.truncation), sigmas=sigmas)[:, 0]
    b = bias(sigma, summary, G, f)
    plain, fixed = interval_pair(draws, cfg.level[0], cfg.level[1], b)
    extra = {
        "n": summary.n, "K": summary.K, "sigma": sigma, "bias": b,
        "interval_uncorrected": [plain.lo, plain.hi],
        "interval_corrected": [fixed.lo, fixed.hi],
    }
    if sigmas is None:
        extra["exact_mean"] = posterior_mean_exact(params, summary, f)
        extra["exact_variance"] = posterior_variance_exact(params, summary, f)
    _emit(matrix_to_csv(draws[:, None], ["pf"]), args, "posterior-draws", cfg, extra)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment config")
    common.add_argument("--seed", type=int, help="master seed (overrides the config)")
    common.add_argument("--threads", type=int, default=1, help="worker processes")
    common.add_argument("--out", help="output path; a .json sidecar is written next to it")
    common.add_argument("--preset", choices=sorted(PRESETS), help="named experiment scale")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="pitmanyor", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("coverage", parents=[common], help="coverage of credible intervals").set_defaults(
        func=_table(run_coverage, "coverage"))
    sub.add_parser("density", parents=[common], help="raw posterior draws of Pf").set_defaults(func=cmd_density)
    sub.add_parser("band-coverage", parents=[common], help="coverage of CDF credible bands").set_defaults(
        func=_table(run_band_coverage, "band-coverage"))
    sub.add_parser("occupancy", parents=[common], help="growth of the number of distinct values").set_defaults(
        func=_table(run_occupancy, "occupancy"))
    sub.add_parser("sigma-study", parents=[common], help="estimation of sigma").set_defaults(
        func=_table(run_sigma_study, "sigma-study"))

    p = sub.add_parser("fit-sigma", parents=[common], help="estimate sigma from a one-column CSV")
    p.add_argument("--data", help="dataset CSV")
    p.add_argument("--M", type=float, help="prior precision (default: config value)")
    p.add_argument("--grid-size", type=int, default=1024)
    p.set_defaults(func=cmd_fit_sigma)

    p = sub.add_parser("sample-prior", parents=[common], help="truncated draws from the prior")
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--eps", type=float, default=1e-3, help="truncation level of the remaining stick")
    p.set_defaults(func=cmd_sample_prior)

    p = sub.add_parser("posterior-draws", parents=[common], help="posterior draws of Pf for a dataset")
    p.add_argument("--data", help="dataset CSV")
    p.set_defaults(func=cmd_posterior_draws)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DomainError, ArithmeticError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
