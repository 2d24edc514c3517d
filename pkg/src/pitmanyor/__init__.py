"""Pitman-Yor posterior simulation, credible sets and type-parameter inference."""
__version__ = "0.1.0"

from .credible import CredibleBand, CredibleInterval, band, band_covers, bias, default_grid, interval
from .distributions import (
    FiniteTable,
    GaussianLaw,
    Identity,
    IndicatorAbove,
    IndicatorInterval,
    P0Decomposition,
    PowerLaw,
    TwoSided,
    alpha0,
    functional_from_spec,
    integral,
    integral_sq,
    law_from_spec,
    named_law,
)
from .errors import (
    ConfigError,
    DegenerateError,
    DivergentMomentError,
    DomainError,
    InsufficientDrawsError,
    IterationCapError,
)
from .posterior import (
    PosteriorDraw,
    eval_draw,
    limit_mean,
    limit_variance,
    posterior_draw,
    posterior_mean_exact,
    posterior_samples,
    posterior_variance_exact,
)
from .sigma import (
    SigmaFit,
    SigmaPosterior,
    ascending_factorial_log,
    eppf_log,
    eppf_total_mass,
    mle_sigma,
    score,
    sigma_posterior,
)
from .stats import PartitionSummary, empirical, ptilde, summarize
from .stickbreaking import PYParams, WeightedAtoms, integrate, sample_py
