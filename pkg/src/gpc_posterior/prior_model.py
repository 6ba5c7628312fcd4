"""
Affine-parametric prior on the diffusion coefficient.

Builds the coefficient u(x, y) = abar(x) + sum_j y_j psi_j(x) with sine-mode
fluctuations whose amplitudes decay like j^-(1+b), validates uniform
ellipticity over the parameter box U = [-1, 1]^J, and samples the uniform
prior on U.
"""

import logging
from typing import Optional, Tuple

import numpy as np

from .errors import DimensionMismatchError, UEAViolationError
from .models import Mesh1D, ParamLike, ParamVector, PriorModel, as_parameter_array

logger = logging.getLogger(__name__)

DEFAULT_KAPPA = 0.5


def build_prior(n_dims: int, decay_b: float, kappa: float, mesh: Mesh1D,
                abar_value: float) -> PriorModel:
    """
    Build a prior with fluctuations psi_j(x) = c * j^-(1+b) * sin(j*pi*x).

    The scale c is chosen so that the fluctuation amplitudes exhaust the
    ellipticity margin exactly: sum_j c * j^-(1+b) = kappa / (1 + kappa) * abar.

    Args:
        n_dims: Number J of parameters (at least 1)
        decay_b: Decay exponent b > 0
        kappa: Ellipticity margin in (0, 1)
        mesh: Mesh on which fields are sampled at element midpoints
        abar_value: Constant mean field value (positive)

    Returns:
        The validated PriorModel

    Raises:
        ValueError: If any argument is outside its admissible range
    """
    if n_dims < 1:
        raise ValueError(f"n_dims must be at least 1, got {n_dims}")
    if decay_b <= 0:
        raise ValueError(f"decay_b must be positive, got {decay_b}")
    if not 0.0 < kappa < 1.0:
        raise ValueError(f"kappa must lie in (0, 1), got {kappa}")
    if abar_value <= 0:
        raise ValueError(f"abar_value must be positive, got {abar_value}")

    j = np.arange(1, n_dims + 1, dtype=float)
    amplitudes = j ** (-(1.0 + decay_b))
    scale_c = kappa / (1.0 + kappa) * abar_value / amplitudes.sum()

    x_mid = mesh.midpoints
    psis = scale_c * amplitudes[:, None] * np.sin(np.pi * j[:, None] * x_mid[None, :])
    abar = np.full(mesh.n_elems, float(abar_value))

    model = PriorModel(mesh=mesh, abar=abar, psis=psis, decay_b=float(decay_b),
                       scale_c=float(scale_c), kappa=float(kappa))
    a_min, a_max = validate_uea(model)
    logger.debug("built prior J=%d b=%g kappa=%g: c=%.6g, a_min=%.6g, a_max=%.6g",
                 n_dims, decay_b, kappa, scale_c, a_min, a_max)
    return model


def validate_uea(model: PriorModel) -> Tuple[float, float]:
    """
    Certify uniform ellipticity of the coefficient over D x U.

    The bounds are elementwise: a_min = min_x (abar - sum_j |psi_j|) and
    a_max = max_x (abar + sum_j |psi_j|) over element midpoints. This is
    the tight discrete bound, not the closed form abar_min / (1 + kappa):
    for priors satisfying the summability condition a_min >= abar_min / (1 + kappa),
    with equality only when the fluctuations reach their sup norms at a
    common midpoint (for build_prior with J = 1, an odd mesh).

    Args:
        model: The prior to check

    Returns:
        The certified pair (a_min, a_max)

    Raises:
        UEAViolationError: If the lower bound is not positive on some element
    """
    spread = np.abs(model.psis).sum(axis=0) if model.n_dims else np.zeros_like(model.abar)
    lower = model.abar - spread
    upper = model.abar + spread
    bad = np.flatnonzero(lower <= 0.0)
    if bad.size:
        raise UEAViolationError(int(bad[0]), float(lower[bad[0]]))
    return float(lower.min()), float(upper.max())


def satisfies_summability(model: PriorModel, kappa: Optional[float] = None) -> bool:
    """
    Check sum_j ||psi_j||_inf <= kappa / (1 + kappa) * abar_min.

    Args:
        model: The prior to check
        kappa: Margin to test against; defaults to the model's own kappa,
            then to DEFAULT_KAPPA

    Returns:
        True if the summability bound holds (up to rounding)
    """
    if kappa is None:
        kappa = model.kappa if model.kappa is not None else DEFAULT_KAPPA
    total = float(model.nominal_sup_norms.sum())
    bound = kappa / (1.0 + kappa) * model.abar_min
    return total <= bound * (1.0 + 1e-12)


def coefficient_at(model: PriorModel, y: ParamLike) -> np.ndarray:
    """
    Evaluate the diffusion coefficient abar + sum_j y_j psi_j elementwise.

    Raises:
        DimensionMismatchError: If y does not have J coordinates
        ParameterRangeError: If y leaves the box U
    """
    y_arr = as_parameter_array(y, model.n_dims)
    if model.n_dims == 0:
        return model.abar.copy()
    return model.abar + y_arr @ model.psis


def sample_prior(model: PriorModel, seed: int) -> ParamVector:
    """Draw y with i.i.d. Uniform(-1, 1) coordinates from a seeded generator."""
    rng = np.random.default_rng(seed)
    return ParamVector(tuple(rng.uniform(-1.0, 1.0, model.n_dims)))


def sample_prior_batch(model: PriorModel, n_samples: int, seed: int) -> np.ndarray:
    """Draw n_samples prior samples as an array of shape (n_samples, J)."""
    rng = np.random.default_rng(seed)
    return rng.uniform(-1.0, 1.0, size=(n_samples, model.n_dims))


def truncate_prior(model: PriorModel, n_dims: int) -> PriorModel:
    """
    Keep the first n_dims fluctuations of an existing prior.

    Unlike build_prior with a smaller J, the scale c is unchanged, so the
    truncated coefficient is the leading part of the original expansion.
    """
    if not 1 <= n_dims <= model.n_dims:
        raise DimensionMismatchError("truncation dimension within model", model.n_dims, n_dims)
    return PriorModel(mesh=model.mesh, abar=model.abar, psis=model.psis[:n_dims],
                      decay_b=model.decay_b, scale_c=model.scale_c, kappa=model.kappa)


def truncation_tail(model: PriorModel, n_dims: int) -> float:
    """Sum of ||psi_j||_inf over the discarded dimensions j > n_dims."""
    return float(model.nominal_sup_norms[n_dims:].sum())


def decay_weights(model: PriorModel) -> np.ndarray:
    """
    Anisotropy weights for a-priori candidate index sets.

    With rho_j = ||psi_j||_inf / abar_min the Taylor coefficient of y^nu
    scales roughly like prod_j rho_j^nu_j, so w_j = ln(rho_j) / ln(rho_1)
    makes weighted total degree a proxy for coefficient magnitude. Weights
    are clipped to at least 1; vanishing fluctuations get a large weight.
    """
    rho = model.nominal_sup_norms / model.abar_min
    rho = np.clip(rho, 1e-300, 1.0 - 1e-12)
    weights = np.log(rho) / np.log(rho[0])
    return np.clip(weights, 1.0, 1e6)
