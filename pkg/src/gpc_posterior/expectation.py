"""
Posterior expectations: semianalytic integration of sparse series and the
Monte Carlo and tensor-quadrature reference estimators.

Every estimator returns a PosteriorSummary holding the normalization
Z = E[Theta], the posterior mean of the FE solution and its pointwise
second moment.
"""

import itertools
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
from numpy.polynomial import legendre as npleg

from .errors import CostGuardError, DimensionMismatchError, NormalizationError
from .forward_fem import solve_batch
from .gpc_series import Basis, Coefficient, SparseSeries
from .models import AffineOperatorFamily, Mesh1D, ObservationSetup, PriorModel
from .posterior_density import PosteriorApprox, theta_exact_batch, truncated_product
from .prior_model import sample_prior_batch
from .sparse_index import MultiIndex

logger = logging.getLogger(__name__)

MAX_QUADRATURE_DIMS = 6
DEFAULT_QUAD_NODES = 12
VARIANCE_TOLERANCE = 1e-8

# number of tensor-quadrature nodes solved per batch
_QUAD_CHUNK = 4096


class EstimatorTag(str, Enum):
    """How a PosteriorSummary was computed."""
    SEMIANALYTIC = "semianalytic"
    MC = "mc"
    QUADRATURE = "quadrature"


@dataclass(frozen=True, eq=False)
class PosteriorSummary:
    """
    Normalization and first two pointwise moments of the posterior.

    Attributes:
        estimator: Which estimator produced the summary
        z: Normalization constant (positive)
        mean_field: Posterior mean of the interior nodal values
        second_moment_diag: Posterior mean of p * p, nodewise
        z_std_error: Standard error of z (Monte Carlo only)
        mean_std_error: Nodewise standard error of the mean (Monte Carlo only)
        work_units: Forward solves (MC, quadrature) or A_0 backsolves (semianalytic)
    """
    estimator: EstimatorTag
    z: float
    mean_field: np.ndarray
    second_moment_diag: np.ndarray
    z_std_error: Optional[float] = None
    mean_std_error: Optional[np.ndarray] = None
    work_units: int = 0

    def __post_init__(self):
        """Check positivity of z and flag negative variances."""
        if not self.z > 0.0:
            raise NormalizationError(self.z)
        object.__setattr__(self, "estimator", EstimatorTag(self.estimator))
        object.__setattr__(self, "mean_field", np.asarray(self.mean_field, dtype=float))
        object.__setattr__(self, "second_moment_diag", np.asarray(self.second_moment_diag, dtype=float))
        if self.mean_field.shape != self.second_moment_diag.shape:
            raise DimensionMismatchError("second moment length", self.mean_field.shape[0],
                                         self.second_moment_diag.shape[0])
        low = float(self.variance.min()) if self.variance.size else 0.0
        if low < -VARIANCE_TOLERANCE:
            logger.warning("%s summary has negative variance %.3e", self.estimator.value, low)

    @property
    def variance(self) -> np.ndarray:
        """Pointwise posterior variance, second moment minus squared mean."""
        return self.second_moment_diag - self.mean_field ** 2


def moment_weight(nu: MultiIndex) -> float:
    """Prior moment E[y^nu] = prod_j (1 / (nu_j + 1) if nu_j is even else 0)."""
    weight = 1.0
    for _, a in nu.entries:
        if a % 2:
            return 0.0
        weight /= a + 1
    return weight


def integrate_series(s: SparseSeries) -> Coefficient:
    """
    Exact prior integral of a sparse series.

    Taylor series are integrated term by term with moment_weight; for
    Legendre series the integral is the coefficient of the constant.
    """
    if s.basis is Basis.LEGENDRE:
        return s.get(MultiIndex.zero(), 0.0)
    total: Coefficient = 0.0
    for nu, c in s.items():
        weight = moment_weight(nu)
        if weight:
            total = total + weight * c
    return total


def posterior_summary_semianalytic(pa: PosteriorApprox, p_series: SparseSeries,
                                   n_budget: Optional[int] = None) -> PosteriorSummary:
    """
    Posterior moments from the density surrogate by exact integration.

    Z = E[Theta_N], Z' = E[[Theta_N p]_{#N}] and E[[Theta_N [p p]_{#N}]_{#N}]
    for the nodewise second moment; the returned fields are Z' / Z.

    Args:
        pa: Density surrogate
        p_series: Taylor series of the FE solution
        n_budget: Budget of the product truncations (defaults to pa.n_budget;
            None in pa never truncates)

    Raises:
        NormalizationError: If the integral of Theta_N is not positive
    """
    if n_budget is None:
        n_budget = pa.n_budget
    z = float(integrate_series(pa.theta_series))
    if z <= 0.0:
        raise NormalizationError(z)
    first = truncated_product(pa.theta_series, p_series, n_budget)
    square = truncated_product(p_series, p_series, n_budget)
    second = truncated_product(pa.theta_series, square.series, n_budget)
    n = p_series.items()[0][1].shape[0] if len(p_series) else 0
    mean = np.asarray(integrate_series(first.series), dtype=float) * np.ones(n) / z
    moment = np.asarray(integrate_series(second.series), dtype=float) * np.ones(n) / z
    logger.debug("semianalytic summary N=%s: Z=%.6g, product dropped %.3e / %.3e",
                 n_budget, z, first.dropped_mass, second.dropped_mass)
    return PosteriorSummary(
        estimator=EstimatorTag.SEMIANALYTIC,
        z=z,
        mean_field=mean,
        second_moment_diag=moment,
        work_units=len(p_series),
    )


def mc_posterior(setup: Optional[ObservationSetup], fam: AffineOperatorFamily, model: PriorModel,
                 n_samples: int, seed: int) -> PosteriorSummary:
    """
    Plain Monte Carlo ratio estimator over prior samples.

    Z ~ mean(Theta(y_i)) and mean ~ sum Theta(y_i) p(y_i) / sum Theta(y_i). The
    ratio bias is not corrected. Standard errors use the sample variance of
    Theta for Z and the delta method for the mean.

    Args:
        setup: Observations; None gives the prior (Theta = 1)
        fam: Operator family
        model: Prior to sample
        n_samples: Number M of samples (at least 1)
        seed: Generator seed
    """
    if n_samples < 1:
        raise ValueError(f"n_samples must be at least 1, got {n_samples}")
    samples = sample_prior_batch(model, n_samples, seed)
    solutions = solve_batch(fam, samples)
    theta = theta_exact_batch(setup, fam, samples, solutions)

    z = float(theta.mean())
    mean = theta @ solutions / theta.sum()
    moment = theta @ solutions ** 2 / theta.sum()
    if n_samples > 1:
        z_se = float(np.std(theta, ddof=1) / np.sqrt(n_samples))
        residual = theta[:, None] * (solutions - mean[None, :])
        mean_se = np.sqrt(np.sum(residual ** 2, axis=0)) / theta.sum()
    else:
        z_se = 0.0
        mean_se = np.zeros_like(mean)
    return PosteriorSummary(
        estimator=EstimatorTag.MC,
        z=z,
        mean_field=mean,
        second_moment_diag=moment,
        z_std_error=z_se,
        mean_std_error=mean_se,
        work_units=n_samples,
    )


def quadrature_oracle(setup: Optional[ObservationSetup], fam: AffineOperatorFamily,
                      model: PriorModel, nodes_per_dim: int = DEFAULT_QUAD_NODES,
                      max_dims: int = MAX_QUADRATURE_DIMS) -> PosteriorSummary:
    """
    Tensor Gauss-Legendre reference with an exact forward solve at every node.

    Raises:
        CostGuardError: If J exceeds max_dims
        ValueError: If nodes_per_dim < 2
    """
    n_dims = model.n_dims
    if n_dims > max_dims:
        raise CostGuardError(n_dims, max_dims)
    if nodes_per_dim < 2:
        raise ValueError(f"nodes_per_dim must be at least 2, got {nodes_per_dim}")
    x, w = npleg.leggauss(nodes_per_dim)
    w = w / 2.0

    n = fam.mesh.n_interior
    z = 0.0
    first = np.zeros(n)
    second = np.zeros(n)
    grid = itertools.product(range(nodes_per_dim), repeat=n_dims)
    total_nodes = nodes_per_dim ** n_dims
    if total_nodes > 100_000:
        logger.warning("quadrature oracle solves %d forward problems", total_nodes)
    while True:
        chunk = list(itertools.islice(grid, _QUAD_CHUNK))
        if not chunk:
            break
        idx = np.array(chunk, dtype=int).reshape(len(chunk), n_dims)
        points = x[idx]
        weights = np.prod(w[idx], axis=1)
        solutions = solve_batch(fam, points)
        theta = theta_exact_batch(setup, fam, points, solutions)
        wt = weights * theta
        z += float(wt.sum())
        first += wt @ solutions
        second += wt @ solutions ** 2
    if z <= 0.0:
        raise NormalizationError(z)
    return PosteriorSummary(
        estimator=EstimatorTag.QUADRATURE,
        z=z,
        mean_field=first / z,
        second_moment_diag=second / z,
        work_units=total_nodes,
    )


def relative_l2_error(mesh: Mesh1D, approx: np.ndarray, reference: np.ndarray) -> float:
    """
    Discrete L^2(D) error ||approx - reference|| / ||reference||.

    Falls back to the absolute error when the reference vanishes.
    """
    diff = float(np.sqrt(mesh.h * np.sum((np.asarray(approx) - np.asarray(reference)) ** 2)))
    scale = float(np.sqrt(mesh.h * np.sum(np.asarray(reference) ** 2)))
    return diff / scale if scale > 0.0 else diff
