"""
Rate and agreement checks on the J = 2 and J = 4 benchmark problems.

These run the full studies and take minutes; select them with -m slow.
"""

import numpy as np
import pytest

from gpc_posterior.expectation import mc_posterior
from gpc_posterior.forward_fem import solve_batch
from gpc_posterior.gpc_series import evaluate_series_batch
from gpc_posterior.posterior_density import theta_exact_batch
from gpc_posterior.prior_model import sample_prior_batch
from gpc_posterior.studies import (
    convergence_study,
    cost_study,
    forward_candidates,
    select_forward_set,
)

pytestmark = [pytest.mark.integration, pytest.mark.slow]


@pytest.fixture(scope="module")
def j2_convergence(j2_bench):
    return convergence_study(j2_bench)


@pytest.fixture(scope="module")
def j4_convergence(j4_bench):
    return convergence_study(j4_bench)


class TestPosteriorAgreement:
    """Semianalytic and Monte Carlo summaries against the quadrature reference."""

    def test_semianalytic_at_64(self, j2_convergence):
        level = next(lv for lv in j2_convergence.levels if lv.n_budget == 64)
        assert level.summary is not None
        assert level.err_z <= 1e-3
        assert level.err_mean <= 1e-3

    def test_monte_carlo_within_standard_errors(self, j2_bench, j2_convergence):
        reference = j2_convergence.reference
        summary = mc_posterior(j2_bench.setup, j2_bench.fam, j2_bench.model, 100_000, seed=11)
        assert abs(summary.z - reference.z) <= 3.0 * summary.z_std_error
        deviation = np.linalg.norm(summary.mean_field - reference.mean_field)
        assert deviation <= 3.0 * np.linalg.norm(summary.mean_std_error)


class TestSurrogateFidelity:
    """Forward surrogate and density bounds on the J = 4 benchmark."""

    def test_forward_surrogate_200_terms(self, j4_bench):
        candidates = forward_candidates(j4_bench.fam, j4_bench.model, j4_bench.config)
        lam = select_forward_set(candidates, 200)
        surrogate = candidates.restrict(lam)
        samples = sample_prior_batch(j4_bench.model, 100, seed=5)
        direct = solve_batch(j4_bench.fam, samples)
        approx = evaluate_series_batch(surrogate, samples)
        relative = np.linalg.norm(approx - direct, axis=1) / np.linalg.norm(direct, axis=1)
        assert relative.max() <= 1e-3

    def test_exact_density_range(self, j4_bench):
        samples = sample_prior_batch(j4_bench.model, 10_000, seed=6)
        theta = theta_exact_batch(j4_bench.setup, j4_bench.fam, samples)
        assert np.all(theta > 0.0)
        assert np.all(theta <= 1.0)

    def test_theta_support_bound(self, j4_convergence):
        for level in j4_convergence.levels:
            assert level.approx.support_size <= 2 * level.n_budget * level.approx.k_terms


class TestRates:
    """Fitted algebraic rates on the J = 4, b = 2 benchmark."""

    def test_density_error_slope(self, j4_convergence):
        assert j4_convergence.slopes["theta_l1"] <= -1.5

    def test_legendre_tail_slope(self, j4_convergence):
        assert j4_convergence.slopes["legendre_tail"] <= -2.0

    def test_density_error_nonincreasing(self, j4_convergence):
        errors = [lv.err_theta_l1 for lv in j4_convergence.levels]
        assert all(b <= 1.2 * a for a, b in zip(errors, errors[1:]))


class TestCost:
    """Error per work unit of Monte Carlo against the surrogate."""

    def test_slopes(self, j4_bench):
        result = cost_study(j4_bench)
        assert -0.65 <= result.mc_slope <= -0.35
        assert result.gpc_slope < result.mc_slope
