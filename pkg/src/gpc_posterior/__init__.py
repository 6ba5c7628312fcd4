"""
gpc posterior

Sparse polynomial chaos surrogates for the Bayesian inverse problem of the
one-dimensional elliptic equation -(u p')' = f with an affine-parametric
diffusion coefficient: forward Taylor recursion, best N-term truncation,
the constructive N-term posterior density and its semianalytic moments.
"""

from .models import (
    Mesh1D,
    ParamVector,
    PriorModel,
    AffineOperatorFamily,
    ObservationSetup,
)
from .errors import (
    GpcPosteriorError,
    ConfigParseError,
    ConfigError,
    DimensionMismatchError,
    ParameterRangeError,
    UEAViolationError,
    FactorizationError,
    ObservationWindowError,
    NonMonotoneSetError,
    IndexSetSizeError,
    BasisError,
    RateFitError,
    NormalizationError,
    CostGuardError,
)
from .prior_model import build_prior, validate_uea, sample_prior
from .forward_fem import assemble, solve_at, observe, potential_exact
from .sparse_index import MultiIndex, MonotoneSet, is_monotone, downward_close, minkowski_sum
from .gpc_series import (
    Basis,
    SparseSeries,
    taylor_forward,
    legendre_from_taylor,
    evaluate_series,
    truncate_largest,
    fit_decay_rate,
)
from .posterior_density import (
    PosteriorApprox,
    theta_exact,
    gpc_observation,
    truncated_product,
    potential_series,
    theta_series,
)
from .expectation import (
    EstimatorTag,
    PosteriorSummary,
    moment_weight,
    integrate_series,
    posterior_summary_semianalytic,
    mc_posterior,
    quadrature_oracle,
)
from .config import BenchConfig, ConfigParser, load_config, config_hash

__version__ = "0.1.0"

__all__ = [
    "Mesh1D",
    "ParamVector",
    "PriorModel",
    "AffineOperatorFamily",
    "ObservationSetup",
    "GpcPosteriorError",
    "ConfigParseError",
    "ConfigError",
    "DimensionMismatchError",
    "ParameterRangeError",
    "UEAViolationError",
    "FactorizationError",
    "ObservationWindowError",
    "NonMonotoneSetError",
    "IndexSetSizeError",
    "BasisError",
    "RateFitError",
    "NormalizationError",
    "CostGuardError",
    "build_prior",
    "validate_uea",
    "sample_prior",
    "assemble",
    "solve_at",
    "observe",
    "potential_exact",
    "MultiIndex",
    "MonotoneSet",
    "is_monotone",
    "downward_close",
    "minkowski_sum",
    "Basis",
    "SparseSeries",
    "taylor_forward",
    "legendre_from_taylor",
    "evaluate_series",
    "truncate_largest",
    "fit_decay_rate",
    "PosteriorApprox",
    "theta_exact",
    "gpc_observation",
    "truncated_product",
    "potential_series",
    "theta_series",
    "EstimatorTag",
    "PosteriorSummary",
    "moment_weight",
    "integrate_series",
    "posterior_summary_semianalytic",
    "mc_posterior",
    "quadrature_oracle",
    "BenchConfig",
    "ConfigParser",
    "load_config",
    "config_hash",
]
