"""
Unit tests for the posterior density, truncated products and the N-term
density surrogate.
"""

import math

import numpy as np
import pytest

from gpc_posterior.errors import BasisError, NormalizationError
from gpc_posterior.forward_fem import observation_map, uniform_windows
from gpc_posterior.gpc_series import Basis, SparseSeries, evaluate_series, evaluate_series_batch
from gpc_posterior.models import ObservationSetup
from gpc_posterior.posterior_density import (
    PosteriorApprox,
    density_errors,
    gpc_observation,
    hellinger_distance,
    k_terms_for,
    potential_series,
    theta_exact,
    theta_exact_batch,
    theta_series,
    truncated_product,
)
from gpc_posterior.prior_model import sample_prior_batch
from gpc_posterior.sparse_index import MultiIndex, total_degree_set

ZERO = MultiIndex.zero()
E1 = MultiIndex.unit(1)
E2 = MultiIndex.unit(2)


def constant_observation_setup(g0, phi0):
    """One window, unit noise, data offset so that Phi = phi0 for constant G = g0."""
    return ObservationSetup(windows=((0.4, 0.6),), delta=[g0 + math.sqrt(2.0 * phi0)], gamma=1.0)


@pytest.fixture
def small_observation_series(small_family, small_setup):
    return gpc_observation(small_family, small_setup, total_degree_set(3, 14))


class TestThetaExact:
    """Tests for the exact density."""

    def test_exact_data_gives_one(self, small_family):
        y = np.array([0.1, 0.2, -0.3])
        template = ObservationSetup(windows=uniform_windows(2), delta=np.zeros(2), gamma=0.1)
        g = observation_map(template, small_family, y)
        setup = ObservationSetup(windows=template.windows, delta=g, gamma=0.1)
        assert theta_exact(setup, small_family, y) == pytest.approx(1.0)

    def test_log_two_gives_half(self, small_family):
        y = np.zeros(3)
        template = ObservationSetup(windows=((0.4, 0.6),), delta=[0.0], gamma=1.0)
        g = observation_map(template, small_family, y)
        setup = ObservationSetup(windows=template.windows, delta=g + math.sqrt(2.0 * math.log(2.0)),
                                 gamma=1.0)
        assert theta_exact(setup, small_family, y) == pytest.approx(0.5)

    def test_values_in_unit_interval(self, small_model, small_family, small_setup):
        samples = sample_prior_batch(small_model, 1000, seed=9)
        values = theta_exact_batch(small_setup, small_family, samples)
        assert np.all(values > 0.0)
        assert np.all(values <= 1.0)

    def test_batch_matches_pointwise(self, small_model, small_family, small_setup):
        samples = sample_prior_batch(small_model, 5, seed=10)
        batch = theta_exact_batch(small_setup, small_family, samples)
        for y, value in zip(samples, batch):
            assert value == pytest.approx(theta_exact(small_setup, small_family, y), rel=1e-12)

    def test_no_data_is_one(self, small_family):
        assert np.array_equal(theta_exact_batch(None, small_family, np.zeros((4, 3))), np.ones(4))


class TestGpcObservation:
    """Tests for the Taylor series of the observation map."""

    def test_zero_index_only(self, small_family, small_setup):
        g = gpc_observation(small_family, small_setup, total_degree_set(3, 0))
        assert g.support == {ZERO}
        assert np.allclose(g[ZERO], observation_map(small_setup, small_family, np.zeros(3)))

    def test_geometric_coefficients(self, proportional_family):
        setup = ObservationSetup(windows=uniform_windows(3), delta=np.zeros(3), gamma=1.0)
        g = gpc_observation(proportional_family, setup, total_degree_set(1, 6))
        g0 = g[ZERO]
        for k in range(1, 7):
            assert np.allclose(g[MultiIndex.from_dense([k])], (-0.5) ** k * g0, rtol=1e-10)

    def test_surrogate_matches_forward_map(self, small_model, small_family, small_setup,
                                           small_observation_series):
        for y in sample_prior_batch(small_model, 20, seed=12):
            exact = observation_map(small_setup, small_family, y)
            approx = evaluate_series(small_observation_series, y)
            assert np.allclose(approx, exact, rtol=1e-6, atol=0.0)


class TestTruncatedProduct:
    """Tests for [s1 * s2]_{#N}."""

    def test_unit_constant_is_identity(self):
        s = SparseSeries(Basis.TAYLOR, {ZERO: 2.0, E1: -1.0, E2: 0.5})
        result = truncated_product(s, SparseSeries.constant(1.0), 10)
        assert result.series.support == s.support
        for nu, c in s.items():
            assert result.series[nu] == c
        assert result.dropped_mass == 0.0

    def test_budget_two(self):
        """Pairs of magnitude 1, 0.5, 0.5, 0.25; budget 2 keeps (0,0) and (0,e1)."""
        s = SparseSeries(Basis.TAYLOR, {ZERO: 1.0, E1: 0.5})
        result = truncated_product(s, s, 2)
        assert result.series.support == {ZERO, E1}
        assert result.series[ZERO] == 1.0
        assert result.series[E1] == 0.5
        assert result.dropped_mass == pytest.approx(0.75)

    def test_exact_product(self):
        s = SparseSeries(Basis.TAYLOR, {ZERO: 1.0, E1: 0.5})
        result = truncated_product(s, s, None)
        assert result.series[MultiIndex.from_dense([2])] == pytest.approx(0.25)
        assert result.series[E1] == pytest.approx(1.0)
        assert result.dropped_mass == 0.0

    def test_scalar_times_vector(self):
        scalar = SparseSeries(Basis.TAYLOR, {ZERO: 2.0, E1: 1.0})
        vector = SparseSeries(Basis.TAYLOR, {ZERO: np.array([1.0, 3.0])}, norm_matrix=np.eye(2))
        result = truncated_product(scalar, vector, None)
        assert np.allclose(result.series[ZERO], [2.0, 6.0])
        assert np.allclose(result.series[E1], [1.0, 3.0])
        assert result.series.norm_matrix is vector.norm_matrix

    def test_elementwise_vector_product(self):
        a = SparseSeries(Basis.TAYLOR, {ZERO: np.array([1.0, 2.0]), E1: np.array([1.0, 0.0])})
        result = truncated_product(a, a, None)
        assert np.allclose(result.series[ZERO], [1.0, 4.0])
        assert np.allclose(result.series[E1], [2.0, 0.0])
        assert result.series.norm_matrix is None

    def test_empty_factor(self):
        result = truncated_product(SparseSeries.empty(), SparseSeries.constant(1.0), 3)
        assert len(result.series) == 0

    def test_legendre_rejected(self):
        with pytest.raises(BasisError):
            truncated_product(SparseSeries.constant(1.0, Basis.LEGENDRE), SparseSeries.constant(1.0), 1)

    def test_dropped_mass_majorizes_pointwise_error(self):
        rng = np.random.default_rng(5)
        lam = total_degree_set(2, 3)
        s1 = SparseSeries(Basis.TAYLOR, {nu: rng.normal() for nu in lam})
        s2 = SparseSeries(Basis.TAYLOR, {nu: rng.normal() for nu in lam})
        exact = truncated_product(s1, s2, None).series
        cut = truncated_product(s1, s2, 12)
        points = rng.uniform(-1, 1, size=(500, 2))
        diff = np.abs(evaluate_series_batch(exact, points) - evaluate_series_batch(cut.series, points))
        assert diff.max() <= cut.dropped_mass + 1e-12


class TestPotentialSeries:
    """Tests for the truncated potential."""

    def test_constant_observations(self):
        g0 = np.array([0.2, 0.3])
        setup = ObservationSetup(windows=uniform_windows(2), delta=[0.5, 0.1], gamma=[0.1, 0.2])
        result = potential_series(SparseSeries.constant(g0), setup, 10)
        expected = 0.5 * ((0.5 - 0.2) ** 2 / 0.1 + (0.1 - 0.3) ** 2 / 0.2)
        assert result.series.support == {ZERO}
        assert result.series[ZERO] == pytest.approx(expected)
        assert result.dropped_mass == 0.0

    def test_value_at_zero(self, small_setup, small_observation_series):
        result = potential_series(small_observation_series, small_setup, 64)
        g0 = small_observation_series[ZERO]
        expected = 0.5 * float(np.sum((small_setup.delta - g0) ** 2 / small_setup.gamma))
        assert evaluate_series(result.series, np.zeros(3)) == pytest.approx(expected, rel=1e-10)

    def test_budget_limits_terms(self, small_setup, small_observation_series):
        assert len(potential_series(small_observation_series, small_setup, 16).series) <= 16

    def test_sup_error_bounded_by_dropped_mass(self, small_model, small_setup, small_observation_series):
        exact = potential_series(small_observation_series, small_setup, None)
        cut = potential_series(small_observation_series, small_setup, 32)
        samples = sample_prior_batch(small_model, 1000, seed=13)
        diff = np.abs(evaluate_series_batch(exact.series, samples)
                      - evaluate_series_batch(cut.series, samples))
        assert exact.dropped_mass == 0.0
        assert diff.max() <= cut.dropped_mass + 1e-12

    def test_legendre_rejected(self, small_setup):
        g = SparseSeries.constant(np.zeros(3), Basis.LEGENDRE)
        with pytest.raises(BasisError):
            potential_series(g, small_setup, 4)


class TestKTerms:
    """Tests for K(N)."""

    @pytest.mark.parametrize("n_budget, c_k, expected", [
        (1, 2.0, 1),
        (2, 2.0, 2),
        (10, 2.0, 5),
        (64, 2.0, 9),
        (64, 3.0, 13),
    ])
    def test_values(self, n_budget, c_k, expected):
        assert k_terms_for(n_budget, c_k) == expected


class TestThetaSeries:
    """Tests for the constructive density surrogate."""

    def test_partial_exponential_sum(self):
        """Test that Phi_0 = 1 and K = 5 give sum_{k <= 5} (-1)^k / k! = 0.3666..."""
        g0 = np.array([0.1])
        setup = constant_observation_setup(0.1, 1.0)
        pa = theta_series(SparseSeries.constant(g0), setup, 10, c_k=2.0)
        assert pa.k_terms == 5
        assert pa.theta_series.support == {ZERO}
        assert pa.theta_series[ZERO] == pytest.approx(11.0 / 30.0, rel=1e-12)

    def test_support_bound(self, small_setup, small_observation_series):
        for n_budget in (4, 8, 16, 32):
            pa = theta_series(small_observation_series, small_setup, n_budget)
            assert pa.support_size <= 2 * n_budget * pa.k_terms

    def test_diagnostics_stages(self, small_setup, small_observation_series):
        pa = theta_series(small_observation_series, small_setup, 8, c_k=2.0)
        stages = [d.stage for d in pa.diagnostics]
        assert stages == ["potential"] + [f"power_{k}" for k in range(1, pa.k_terms + 1)]
        assert pa.total_dropped_mass == pytest.approx(sum(d.dropped_mass for d in pa.diagnostics))
        assert pa.remainder_bound == pytest.approx(
            pa.potential.l1_norm() ** (pa.k_terms + 1) / math.factorial(pa.k_terms + 1))

    def test_budget_one(self, small_setup, small_observation_series):
        pa = theta_series(small_observation_series, small_setup, 1)
        assert pa.k_terms == 1
        assert pa.support_size <= 2

    def test_error_bound_holds(self, small_model, small_family, small_setup,
                               small_observation_series):
        """sup |Theta - Theta_N| on sampled y stays below the reported majorant."""
        pa = theta_series(small_observation_series, small_setup, 64, c_k=3.0)
        samples = sample_prior_batch(small_model, 1000, seed=14)
        exact = theta_exact_batch(small_setup, small_family, samples)
        approx = evaluate_series_batch(pa.theta_series, samples)
        assert np.max(np.abs(exact - approx)) <= pa.total_error_bound + 1e-5

    def test_errors_shrink_with_budget(self, small_model, small_family, small_setup,
                                       small_observation_series):
        samples = sample_prior_batch(small_model, 2000, seed=15)
        exact = theta_exact_batch(small_setup, small_family, samples)
        coarse = theta_series(small_observation_series, small_setup, 4)
        fine = theta_series(small_observation_series, small_setup, 64)
        l1_coarse, _ = density_errors(coarse, small_setup, small_family, samples, exact)
        l1_fine, sup_fine = density_errors(fine, small_setup, small_family, samples, exact)
        assert l1_fine < l1_coarse
        assert l1_fine <= sup_fine

    def test_invalid_arguments(self, small_setup, small_observation_series):
        with pytest.raises(ValueError):
            theta_series(small_observation_series, small_setup, 0)
        with pytest.raises(ValueError):
            theta_series(small_observation_series, small_setup, 4, c_k=0.0)


class TestHellinger:
    """Tests for the Hellinger distance estimate."""

    def test_small_for_accurate_surrogate(self, small_model, small_family, small_setup,
                                          small_observation_series):
        pa = theta_series(small_observation_series, small_setup, 64, c_k=3.0)
        samples = sample_prior_batch(small_model, 500, seed=16)
        assert hellinger_distance(pa, small_setup, small_family, samples) < 1e-3

    def test_negative_surrogate_rejected(self, small_model, small_family, small_setup):
        pa = PosteriorApprox(theta_series=SparseSeries.constant(-1.0), n_budget=1, k_terms=1,
                             potential=SparseSeries.empty(), diagnostics=(), remainder_bound=0.0)
        samples = sample_prior_batch(small_model, 10, seed=17)
        with pytest.raises(NormalizationError):
            hellinger_distance(pa, small_setup, small_family, samples)
