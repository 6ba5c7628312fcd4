"""
Benchmark problems and the convergence, cost and truncation studies.

A benchmark couples a decay-law prior, its FE operator family and synthetic
data drawn from a seeded ground truth. Studies compare the sparse surrogate
against a reference posterior (tensor quadrature for J <= 6, a large Monte
Carlo run otherwise) and fit algebraic rates to the resulting errors.
"""

import functools
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple, TypeVar

import numpy as np

from .config import BenchConfig
from .errors import NormalizationError, RateFitError
from .expectation import (
    MAX_QUADRATURE_DIMS,
    PosteriorSummary,
    mc_posterior,
    posterior_summary_semianalytic,
    quadrature_oracle,
    relative_l2_error,
)
from .forward_fem import assemble, h_convergence, synthesize_data, uniform_windows
from .gpc_series import (
    SparseSeries,
    best_n_term_tail,
    fit_decay_rate,
    fit_power_law,
    legendre_from_taylor,
    taylor_forward,
)
from .models import AffineOperatorFamily, Mesh1D, ObservationSetup, PriorModel
from .posterior_density import (
    PosteriorApprox,
    density_errors,
    hellinger_distance,
    observe_series,
    theta_exact_batch,
    theta_series,
)
from .prior_model import (
    build_prior,
    decay_weights,
    sample_prior,
    sample_prior_batch,
    truncate_prior,
    truncation_tail,
)
from .sparse_index import MonotoneSet, greedy_monotone_selection, total_degree_set

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

SELF_CHECK_MESHES = (16, 32, 64, 128)

# offsets separating the random streams drawn from mc_seed
DENSITY_SEED_OFFSET = 10_000
REPLICATE_SEED_OFFSET = 20_000


@dataclass(frozen=True, eq=False)
class Benchmark:
    """
    A fully assembled benchmark problem.

    Attributes:
        config: Configuration it was built from
        mesh: FE mesh
        model: Prior
        fam: Operator family
        setup: Observation windows with synthetic data
    """
    config: BenchConfig
    mesh: Mesh1D
    model: PriorModel
    fam: AffineOperatorFamily
    setup: ObservationSetup


def build_benchmark(config: BenchConfig, n_dims: Optional[int] = None) -> Benchmark:
    """
    Assemble prior, operator family and synthetic data from a configuration.

    The ground truth is a prior draw with truth_seed; the data add Gaussian
    noise of variance gamma drawn with noise_seed.
    """
    mesh = Mesh1D(config.mesh_elems)
    model = build_prior(n_dims or config.n_dims, config.decay_b, config.kappa, mesh, config.abar)
    fam = assemble(model, mesh, config.source)
    y_truth = sample_prior(model, config.truth_seed)
    template = ObservationSetup(uniform_windows(config.n_obs), np.zeros(config.n_obs), config.gamma)
    setup = synthesize_data(template, fam, y_truth, config.noise_seed)
    logger.info("benchmark J=%d b=%g mesh=%d K=%d gamma=%g", model.n_dims, config.decay_b,
                config.mesh_elems, config.n_obs, config.gamma)
    return Benchmark(config=config, mesh=mesh, model=model, fam=fam, setup=setup)


def map_ordered(fn: Callable[[T], R], jobs: Sequence[T], workers: int = 1) -> List[R]:
    """Apply fn to every job, in worker processes if workers > 1, keeping job order."""
    if workers <= 1 or len(jobs) <= 1:
        return [fn(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(fn, jobs))


def forward_candidates(fam: AffineOperatorFamily, model: PriorModel, config: BenchConfig) -> SparseSeries:
    """Taylor coefficients of the forward solution on the anisotropic candidate set."""
    lam = total_degree_set(model.n_dims, config.candidate_degree, decay_weights(model),
                           max_cardinality=config.max_candidates)
    series = taylor_forward(fam, lam)
    logger.info("candidate forward set: %d indices, max degree %d", len(lam), lam.max_degree)
    return series


def select_forward_set(candidates: SparseSeries, n_budget: int) -> MonotoneSet:
    """Monotone set of at most n_budget candidates with the largest coefficient norms."""
    scores = dict(zip(candidates.indices(), candidates.norms()))
    return greedy_monotone_selection(scores, n_budget)


def reference_summary(bench: Benchmark, model: Optional[PriorModel] = None,
                      fam: Optional[AffineOperatorFamily] = None) -> PosteriorSummary:
    """Tensor-quadrature reference for J <= 6, otherwise a large Monte Carlo run."""
    model = bench.model if model is None else model
    fam = bench.fam if fam is None else fam
    if model.n_dims <= MAX_QUADRATURE_DIMS:
        summary = quadrature_oracle(bench.setup, fam, model, bench.config.quad_nodes)
    else:
        logger.warning("J=%d exceeds the quadrature limit; using %d Monte Carlo samples as reference",
                       model.n_dims, bench.config.mc_reference_samples)
        summary = mc_posterior(bench.setup, fam, model, bench.config.mc_reference_samples,
                               bench.config.mc_seed)
    logger.info("reference (%s): Z=%.8g", summary.estimator.value, summary.z)
    return summary


def safe_slope(points: Sequence[Tuple[float, float]]) -> float:
    """Decay rate of the finite, positive points; nan if too few remain."""
    usable = [(n, e) for n, e in points if np.isfinite(e) and e > 0]
    try:
        return fit_decay_rate(usable)
    except RateFitError as e:
        logger.warning("rate fit skipped: %s", e)
        return float("nan")


@dataclass(frozen=True, eq=False)
class LevelContext:
    """Shared inputs of the per-budget runs."""
    fam: AffineOperatorFamily
    candidates: SparseSeries
    observations: SparseSeries
    setup: ObservationSetup
    mesh: Mesh1D
    reference: PosteriorSummary
    c_k: float
    samples: Optional[np.ndarray] = None
    exact_values: Optional[np.ndarray] = None
    record_wall_time: bool = False


@dataclass(frozen=True, eq=False)
class LevelResult:
    """
    Outcome of the surrogate at one budget N.

    Attributes:
        n_budget: N
        forward_size: Cardinality of the forward set (A_0 backsolves)
        approx: The density surrogate
        summary: Semianalytic summary, None if Z lost positivity
        err_z: Relative error of Z
        err_mean: Relative discrete L^2 error of the posterior mean
        err_theta_l1: Monte Carlo L^1 error of Theta_N
        err_theta_sup: Sampled sup error of Theta_N
        hellinger: Estimated Hellinger distance of the posteriors
        wall_time: Seconds spent (0.0 unless recorded)
    """
    n_budget: int
    forward_size: int
    approx: PosteriorApprox
    summary: Optional[PosteriorSummary]
    err_z: float
    err_mean: float
    err_theta_l1: float = float("nan")
    err_theta_sup: float = float("nan")
    hellinger: float = float("nan")
    wall_time: float = 0.0


def run_level(context: LevelContext, n_budget: int) -> LevelResult:
    """Build Theta_N and its semianalytic summary at one budget and measure errors."""
    start = time.perf_counter()
    lam = select_forward_set(context.candidates, n_budget)
    p_series = context.candidates.restrict(lam)
    g_series = context.observations.restrict(lam)
    approx = theta_series(g_series, context.setup, n_budget, context.c_k)
    reference = context.reference
    try:
        summary = posterior_summary_semianalytic(approx, p_series, n_budget)
        err_z = abs(summary.z - reference.z) / reference.z
        err_mean = relative_l2_error(context.mesh, summary.mean_field, reference.mean_field)
    except NormalizationError as e:
        logger.warning("N=%d: %s", n_budget, e)
        summary, err_z, err_mean = None, float("nan"), float("nan")

    extra: Dict[str, float] = {}
    if context.samples is not None:
        l1, sup = density_errors(approx, context.setup, context.fam, context.samples,
                                 context.exact_values)
        extra["err_theta_l1"] = l1
        extra["err_theta_sup"] = sup
        try:
            extra["hellinger"] = hellinger_distance(approx, context.setup, context.fam, context.samples,
                                                    context.exact_values)
        except NormalizationError as e:
            logger.warning("N=%d: %s", n_budget, e)
    wall = time.perf_counter() - start if context.record_wall_time else 0.0
    logger.info("N=%d: |forward|=%d K=%d |theta|=%d err_Z=%.3e err_mean=%.3e",
                n_budget, len(lam), approx.k_terms, approx.support_size, err_z, err_mean)
    return LevelResult(n_budget=n_budget, forward_size=len(lam), approx=approx, summary=summary,
                       err_z=err_z, err_mean=err_mean, wall_time=wall, **extra)


def _level_context(bench: Benchmark, reference: PosteriorSummary, candidates: SparseSeries,
                   with_density: bool) -> LevelContext:
    config = bench.config
    samples = exact = None
    if with_density:
        samples = sample_prior_batch(bench.model, config.density_samples,
                                     config.mc_seed + DENSITY_SEED_OFFSET)
        exact = theta_exact_batch(bench.setup, bench.fam, samples)
    return LevelContext(
        fam=bench.fam,
        candidates=candidates,
        observations=observe_series(bench.setup, candidates, bench.mesh),
        setup=bench.setup,
        mesh=bench.mesh,
        reference=reference,
        c_k=config.c_k,
        samples=samples,
        exact_values=exact,
        record_wall_time=config.record_wall_time,
    )


@dataclass(frozen=True, eq=False)
class ConvergenceResult:
    """
    Output of the convergence study.

    Attributes:
        reference: Reference summary
        candidates: Forward Taylor series on the candidate set
        levels: One LevelResult per N
        forward_tail: (N, Taylor l1 tail, Legendre l2 tail) of the forward map
        slopes: Fitted decay rates keyed by error column
    """
    reference: PosteriorSummary
    candidates: SparseSeries
    levels: Tuple[LevelResult, ...]
    forward_tail: Tuple[Tuple[int, float, float], ...]
    slopes: Dict[str, float]


def convergence_study(bench: Benchmark, workers: int = 1) -> ConvergenceResult:
    """
    Errors of the surrogate posterior across the budgets of the configuration.

    Besides the posterior errors, the best N-term tails of the forward map
    are recorded: the l1 tail of the Taylor coefficients (a sup-norm bound)
    and, via exact conversion and Parseval, the L^2 tail of its Legendre
    expansion.
    """
    config = bench.config
    reference = reference_summary(bench)
    candidates = forward_candidates(bench.fam, bench.model, config)
    context = _level_context(bench, reference, candidates, with_density=True)
    levels = map_ordered(functools.partial(run_level, context), list(config.n_list), workers)

    legendre = legendre_from_taylor(candidates)
    taylor_tail = best_n_term_tail(candidates, config.n_list, q=1.0)
    legendre_tail = best_n_term_tail(legendre, config.n_list, q=2.0)
    forward_tail = tuple(zip(config.n_list, taylor_tail, legendre_tail))

    slopes = {
        "err_z": safe_slope([(lv.n_budget, lv.err_z) for lv in levels]),
        "err_mean": safe_slope([(lv.n_budget, lv.err_mean) for lv in levels]),
        "theta_l1": safe_slope([(lv.n_budget, lv.err_theta_l1) for lv in levels]),
        "taylor_tail": safe_slope([(n, t) for n, t, _ in forward_tail]),
        "legendre_tail": safe_slope([(n, t) for n, _, t in forward_tail]),
    }
    for name, slope in slopes.items():
        logger.info("fitted slope %-14s %.3f", name, slope)
    return ConvergenceResult(reference=reference, candidates=candidates, levels=tuple(levels),
                             forward_tail=forward_tail, slopes=slopes)


@dataclass(frozen=True)
class CostRow:
    """One point of the cost comparison."""
    method: str
    parameter: int
    work_units: int
    error: float


@dataclass(frozen=True)
class CostResult:
    """
    Output of the cost study.

    Attributes:
        rows: MC rows (parameter M) then gpc rows (parameter N)
        mc_slope: Error-versus-work slope of Monte Carlo
        gpc_slope: Error-versus-work slope of the surrogate
        crossover_work: Work at which the fitted lines cross, if they do
    """
    rows: Tuple[CostRow, ...]
    mc_slope: float
    gpc_slope: float
    crossover_work: Optional[float]


def mc_error(bench: Benchmark, reference: PosteriorSummary, job: Tuple[int, int]) -> float:
    """Relative mean-field error of one Monte Carlo replicate (M, seed)."""
    n_samples, seed = job
    summary = mc_posterior(bench.setup, bench.fam, bench.model, n_samples, seed)
    return relative_l2_error(bench.mesh, summary.mean_field, reference.mean_field)


def crossover(mc_fit: Tuple[float, float], gpc_fit: Tuple[float, float]) -> Optional[float]:
    """Work where two fitted power laws intersect; None for parallel lines."""
    (s_mc, b_mc), (s_gpc, b_gpc) = mc_fit, gpc_fit
    if math.isclose(s_mc, s_gpc):
        return None
    return float(math.exp((b_mc - b_gpc) / (s_gpc - s_mc)))


def _fit_or_nan(points: Sequence[Tuple[float, float]]) -> Tuple[float, float]:
    usable = [(w, e) for w, e in points if np.isfinite(e) and e > 0]
    try:
        return fit_power_law(usable)
    except RateFitError as e:
        logger.warning("cost fit skipped: %s", e)
        return float("nan"), float("nan")


def cost_study(bench: Benchmark, workers: int = 1) -> CostResult:
    """
    Error against work for Monte Carlo and for the sparse surrogate.

    Monte Carlo work is the number of forward solves M and its error the root
    mean square over mc_replicates seeds; surrogate work is the number of A_0
    backsolves |Lambda_N|. Mesh cost is not part of either count.
    """
    config = bench.config
    reference = reference_summary(bench)

    jobs = [(m, config.mc_seed + REPLICATE_SEED_OFFSET + i * config.mc_replicates + r)
            for i, m in enumerate(config.m_list) for r in range(config.mc_replicates)]
    errors = map_ordered(functools.partial(mc_error, bench, reference), jobs, workers)
    rows: List[CostRow] = []
    for i, m in enumerate(config.m_list):
        chunk = np.array(errors[i * config.mc_replicates:(i + 1) * config.mc_replicates])
        rows.append(CostRow("mc", m, m, float(np.sqrt(np.mean(chunk ** 2)))))

    candidates = forward_candidates(bench.fam, bench.model, config)
    context = _level_context(bench, reference, candidates, with_density=False)
    levels = map_ordered(functools.partial(run_level, context), list(config.n_list), workers)
    for lv in levels:
        rows.append(CostRow("gpc", lv.n_budget, lv.forward_size, lv.err_mean))

    mc_fit = _fit_or_nan([(r.work_units, r.error) for r in rows if r.method == "mc"])
    gpc_fit = _fit_or_nan([(r.work_units, r.error) for r in rows if r.method == "gpc"])
    cross = None if np.isnan(mc_fit[0]) or np.isnan(gpc_fit[0]) else crossover(mc_fit, gpc_fit)
    logger.info("error-vs-work slopes: mc %.3f, gpc %.3f, crossover %s",
                mc_fit[0], gpc_fit[0], "none" if cross is None else f"{cross:.1f}")
    return CostResult(rows=tuple(rows), mc_slope=mc_fit[0], gpc_slope=gpc_fit[0],
                      crossover_work=cross)


@dataclass(frozen=True)
class SweepRow:
    """Surrogate error with the prior truncated to J dimensions."""
    n_dims: int
    truncation_tail: float
    forward_size: int
    err_z: float
    err_mean: float


def _sweep_point(bench: Benchmark, reference: PosteriorSummary, n_dims: int) -> SweepRow:
    config = bench.config
    model = truncate_prior(bench.model, n_dims)
    fam = assemble(model, bench.mesh, config.source)
    candidates = forward_candidates(fam, model, config)
    context = LevelContext(
        fam=fam,
        candidates=candidates,
        observations=observe_series(bench.setup, candidates, bench.mesh),
        setup=bench.setup,
        mesh=bench.mesh,
        reference=reference,
        c_k=config.c_k,
    )
    level = run_level(context, config.n_list[-1])
    return SweepRow(n_dims, truncation_tail(bench.model, n_dims), level.forward_size,
                    level.err_z, level.err_mean)


def truncation_dimension_study(config: BenchConfig, workers: int = 1) -> List[SweepRow]:
    """
    Surrogate error at the largest N when the prior keeps only J terms.

    Data and reference come from the prior with max(j_sweep) terms; each
    truncated prior keeps the leading fluctuations of that prior, so the
    error isolates the dimension truncation, which decays like J^-b.
    """
    bench = build_benchmark(config, n_dims=config.j_sweep[-1])
    reference = reference_summary(bench)
    rows = map_ordered(functools.partial(_sweep_point, bench, reference), list(config.j_sweep),
                       workers)
    for row in rows:
        logger.info("J=%d: tail %.3e err_Z=%.3e err_mean=%.3e", row.n_dims, row.truncation_tail,
                    row.err_z, row.err_mean)
    return rows


def fem_self_check(n_elems_list: Sequence[int] = SELF_CHECK_MESHES) -> Tuple[List[Tuple[int, float]], float]:
    """
    FE errors for u = 1, f = 1 on refined meshes and the fitted order in h.

    Returns:
        The (n_elems, error) pairs and the order (2 for P1 elements)
    """
    points = h_convergence(n_elems_list, coefficient=1.0, source=1.0)
    order = -fit_decay_rate(points)
    logger.info("FE self-check: fitted order in h = %.3f", order)
    return points, order
