"""
Posterior density of the Bayesian inverse problem and its sparse N-term surrogate.

The exact density is Theta(y) = exp(-Phi(y)) with the least-squares potential
Phi. The surrogate replaces the observation map by its Taylor series,
assembles the potential with truncated products, and sums the truncated
exponential series

    Theta_N = sum_{k <= K(N)} (-1)^k / k! * [Phi^k]_{#N},

keeping a record of the norm mass every truncation discards.
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from .errors import BasisError, NormalizationError
from .forward_fem import observation_matrix, potential_exact, solve_batch
from .gpc_series import (
    Basis,
    SparseSeries,
    Truncation,
    evaluate_series_batch,
    taylor_forward,
    truncate_largest,
)
from .models import AffineOperatorFamily, Mesh1D, ObservationSetup, ParamLike
from .sparse_index import MonotoneSet, MultiIndex

logger = logging.getLogger(__name__)

DEFAULT_C_K = 2.0


def theta_exact(setup: ObservationSetup, fam: AffineOperatorFamily, y: ParamLike) -> float:
    """Exact density exp(-Phi(y)), a value in (0, 1]."""
    return math.exp(-potential_exact(setup, fam, y))


def theta_exact_batch(setup: Optional[ObservationSetup], fam: AffineOperatorFamily,
                      samples: np.ndarray, solutions: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Exact density at many parameter points.

    Args:
        setup: Observations; None means no data (Theta = 1)
        fam: Operator family
        samples: Array of shape (m, J)
        solutions: FE solutions at the samples, if already computed

    Returns:
        Array of shape (m,)
    """
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    if setup is None:
        return np.ones(samples.shape[0])
    if solutions is None:
        solutions = solve_batch(fam, samples)
    predicted = solutions @ observation_matrix(setup, fam.mesh).T
    potential = 0.5 * np.sum((setup.delta - predicted) ** 2 / setup.gamma, axis=1)
    return np.exp(-potential)


def observe_series(setup: ObservationSetup, p_series: SparseSeries, mesh: Mesh1D) -> SparseSeries:
    """Apply the observation functionals to every coefficient of a forward series."""
    obs = observation_matrix(setup, mesh)
    return p_series.map_coefficients(lambda c: obs @ c)


def gpc_observation(fam: AffineOperatorFamily, setup: ObservationSetup,
                    lam: MonotoneSet) -> SparseSeries:
    """
    Taylor series of the observation map on a monotone set.

    The observation functionals are linear, so g_nu = O(t_nu) are the exact
    Taylor coefficients of y -> O(G(y)).
    """
    return observe_series(setup, taylor_forward(fam, lam), fam.mesh)


def _product_norm_matrix(s1: SparseSeries, s2: SparseSeries):
    if s1.is_vector_valued and s2.is_vector_valued:
        return None
    return s2.norm_matrix if s2.is_vector_valued else s1.norm_matrix


def truncated_product(s1: SparseSeries, s2: SparseSeries, n_budget: Optional[int]) -> Truncation:
    """
    Best N-term truncation [s1 * s2]_{#N} of the product of two Taylor series.

    All pairwise products c_nu * c'_nu' are ranked by the product of the
    coefficient norms; the n_budget largest pairs (ties in canonical order of
    nu, then nu') are accumulated onto nu + nu'. Scalar-by-vector and
    elementwise vector-by-vector products are supported.

    Args:
        s1: First factor
        s2: Second factor
        n_budget: Number of pairs to keep; None keeps all (exact product)

    Returns:
        Truncation holding the product and the summed norm products of the
        excluded pairs

    Raises:
        BasisError: If a factor is not a Taylor series
    """
    for s in (s1, s2):
        if s.basis is not Basis.TAYLOR:
            raise BasisError(Basis.TAYLOR.value, s.basis.value)
    items1 = s1.items()
    items2 = s2.items()
    norm_matrix = _product_norm_matrix(s1, s2)
    if not items1 or not items2:
        return Truncation(SparseSeries(Basis.TAYLOR, {}, norm_matrix), 0.0)

    magnitudes = np.outer(s1.norms(), s2.norms()).ravel()
    rows, cols = np.divmod(np.arange(magnitudes.size), len(items2))
    if n_budget is None or n_budget >= magnitudes.size:
        kept = np.arange(magnitudes.size)
        dropped = 0.0
    else:
        order = np.lexsort((cols, rows, -magnitudes))
        kept = np.sort(order[:n_budget])
        dropped = float(magnitudes[order[n_budget:]].sum())

    terms: Dict[MultiIndex, object] = {}
    for pair in kept:
        nu, c1 = items1[rows[pair]]
        mu, c2 = items2[cols[pair]]
        key = nu + mu
        terms[key] = terms[key] + c1 * c2 if key in terms else c1 * c2
    return Truncation(SparseSeries(Basis.TAYLOR, terms, norm_matrix), dropped)


def potential_series(g: SparseSeries, setup: ObservationSetup, n_budget: Optional[int]) -> Truncation:
    """
    Truncated potential [Phi_N]_{#N} from the observation series.

    Phi_N = 1/2 sum_k (delta_k^2 - 2 delta_k g_k + [g_k g_k]_{#N}) / gamma_k,
    with each component square truncated separately. The assembled series is
    then cut to its n_budget largest terms, so [Phi_N]_{#N} never carries
    more than n_budget terms.

    Returns:
        Truncation with the potential series and the dropped mass, which
        majorizes sup_U |Phi_N - [Phi_N]_{#N}|
    """
    if g.basis is not Basis.TAYLOR:
        raise BasisError(Basis.TAYLOR.value, g.basis.value)
    series = SparseSeries.constant(0.5 * float(np.sum(setup.delta ** 2 / setup.gamma)))
    dropped = 0.0
    for k in range(setup.n_obs):
        g_k = g.component(k)
        weight = 1.0 / setup.gamma[k]
        square = truncated_product(g_k, g_k, n_budget)
        series = series + g_k.scale(-setup.delta[k] * weight) + square.series.scale(0.5 * weight)
        dropped += 0.5 * weight * square.dropped_mass
    if n_budget is not None:
        cut = truncate_largest(series, n_budget)
        series = cut.series
        dropped += cut.dropped_mass
    logger.debug("potential series: %d terms, dropped mass %.3e", len(series), dropped)
    return Truncation(series, dropped)


def k_terms_for(n_budget: int, c_k: float = DEFAULT_C_K) -> int:
    """Number of exponential-series terms K(N) = max(1, ceil(c_k ln N))."""
    return max(1, math.ceil(c_k * math.log(n_budget)))


@dataclass(frozen=True)
class StageDiagnostic:
    """
    Bookkeeping of one truncation stage.

    Attributes:
        stage: "potential" or "power_k"
        dropped_mass: Norm mass discarded at this stage
        support_size: Number of terms after the stage
        error_bound: Propagated sup-norm error majorant of the stage output
    """
    stage: str
    dropped_mass: float
    support_size: int
    error_bound: float


@dataclass(frozen=True)
class PosteriorApprox:
    """
    Constructive N-term approximation of the posterior density.

    Attributes:
        theta_series: Theta_N in the Taylor basis
        n_budget: Truncation budget N
        k_terms: Number K(N) of exponential-series terms
        potential: The truncated potential series [Phi_N]_{#N}
        diagnostics: One record per truncation stage
        remainder_bound: ||[Phi_N]_{#N}||_l1^(K+1) / (K+1)!, the
            exponential-series remainder majorant
    """
    theta_series: SparseSeries
    n_budget: int
    k_terms: int
    potential: SparseSeries
    diagnostics: Tuple[StageDiagnostic, ...]
    remainder_bound: float

    @property
    def support_size(self) -> int:
        return len(self.theta_series)

    @property
    def total_dropped_mass(self) -> float:
        return float(sum(d.dropped_mass for d in self.diagnostics))

    @property
    def total_error_bound(self) -> float:
        """
        Sup-norm majorant of Theta_N - exp(-Phi_N).

        The potential truncation enters once (exp(-x) is 1-Lipschitz for
        x >= 0), each power k enters with weight 1/k!.
        """
        bound = self.remainder_bound
        for d in self.diagnostics:
            if d.stage == "potential":
                bound += d.dropped_mass
            else:
                k = int(d.stage.split("_")[1])
                bound += d.error_bound / math.factorial(k)
        return float(bound)


def theta_series(g: SparseSeries, setup: ObservationSetup, n_budget: int,
                 c_k: float = DEFAULT_C_K) -> PosteriorApprox:
    """
    Build Theta_N from the observation series.

    Powers are formed left to right, [phi^k] = [[phi^(k-1)] * phi]_{#N}, with
    the same budget N for every k. For each power the propagated error
    e_k = e_(k-1) ||phi||_l1 + dropped_k bounds sup_U |phi^k - [phi^k]|.

    Args:
        g: Taylor series of the observation map
        setup: Observations
        n_budget: Budget N (at least 1)
        c_k: Constant in K(N) = max(1, ceil(c_k ln N))

    Returns:
        PosteriorApprox with diagnostics
    """
    if n_budget < 1:
        raise ValueError(f"n_budget must be at least 1, got {n_budget}")
    if c_k <= 0:
        raise ValueError(f"c_k must be positive, got {c_k}")
    k_terms = k_terms_for(n_budget, c_k)
    potential = potential_series(g, setup, n_budget)
    phi = potential.series
    phi_norm = phi.l1_norm()
    diagnostics = [StageDiagnostic("potential", potential.dropped_mass, len(phi), potential.dropped_mass)]

    total = SparseSeries.constant(1.0) + phi.scale(-1.0)
    power = phi
    error = 0.0
    diagnostics.append(StageDiagnostic("power_1", 0.0, len(phi), 0.0))
    for k in range(2, k_terms + 1):
        product = truncated_product(power, phi, n_budget)
        power = product.series
        error = error * phi_norm + product.dropped_mass
        total = total + power.scale((-1.0) ** k / math.factorial(k))
        diagnostics.append(StageDiagnostic(f"power_{k}", product.dropped_mass, len(power), error))

    remainder = phi_norm ** (k_terms + 1) / math.factorial(k_terms + 1)
    approx = PosteriorApprox(
        theta_series=total,
        n_budget=n_budget,
        k_terms=k_terms,
        potential=phi,
        diagnostics=tuple(diagnostics),
        remainder_bound=float(remainder),
    )
    logger.debug("theta series N=%d K=%d: %d terms, dropped %.3e, remainder %.3e",
                 n_budget, k_terms, approx.support_size, approx.total_dropped_mass, remainder)
    return approx


def density_errors(pa: PosteriorApprox, setup: ObservationSetup, fam: AffineOperatorFamily,
                   samples: np.ndarray, exact_values: Optional[np.ndarray] = None) -> Tuple[float, float]:
    """
    Monte Carlo L^1(U, mu_0) error and sampled sup error of Theta - Theta_N.

    Args:
        pa: The approximation
        setup: Observations
        fam: Operator family
        samples: Prior samples, shape (m, J)
        exact_values: Theta at the samples, if already computed

    Returns:
        (mean |Theta - Theta_N|, max |Theta - Theta_N|) over the samples
    """
    if exact_values is None:
        exact_values = theta_exact_batch(setup, fam, samples)
    diff = np.abs(exact_values - evaluate_series_batch(pa.theta_series, samples))
    return float(diff.mean()), float(diff.max())


def hellinger_distance(pa: PosteriorApprox, setup: ObservationSetup, fam: AffineOperatorFamily,
                       samples: np.ndarray, exact_values: Optional[np.ndarray] = None) -> float:
    """
    Monte Carlo estimate of the Hellinger distance between the exact and the
    approximate posterior, both normalized over the same samples.

    Negative values of Theta_N are clipped to zero before normalization.

    Raises:
        NormalizationError: If Theta_N has no positive mass on the samples
    """
    if exact_values is None:
        exact_values = theta_exact_batch(setup, fam, samples)
    approx = np.clip(evaluate_series_batch(pa.theta_series, samples), 0.0, None)
    z_exact = float(exact_values.mean())
    z_approx = float(approx.mean())
    if z_approx <= 0.0:
        raise NormalizationError(z_approx)
    integrand = (np.sqrt(exact_values / z_exact) - np.sqrt(approx / z_approx)) ** 2
    return float(np.sqrt(0.5 * integrand.mean()))

