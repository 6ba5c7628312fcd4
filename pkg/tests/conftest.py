"""Shared fixtures: small meshes, priors and benchmark problems."""

import numpy as np
import pytest

from gpc_posterior.config import BenchConfig
from gpc_posterior.forward_fem import assemble, uniform_windows
from gpc_posterior.models import Mesh1D, ObservationSetup, PriorModel
from gpc_posterior.prior_model import build_prior
from gpc_posterior.studies import build_benchmark


@pytest.fixture
def mesh16():
    return Mesh1D(16)


@pytest.fixture
def proportional_model(mesh16):
    """J = 1 prior with psi_1 = 0.5 * abar, so p(y) = p_0 / (1 + 0.5 y)."""
    abar = np.full(mesh16.n_elems, 1.0)
    return PriorModel(mesh=mesh16, abar=abar, psis=[0.5 * abar])


@pytest.fixture
def proportional_family(proportional_model, mesh16):
    return assemble(proportional_model, mesh16)


@pytest.fixture
def small_model():
    """J = 3 decay-law prior on a 24-element mesh."""
    return build_prior(3, 2.0, 0.5, Mesh1D(24), 1.0)


@pytest.fixture
def small_family(small_model):
    return assemble(small_model, small_model.mesh)


@pytest.fixture
def small_setup(small_family):
    """Three windows with fixed data; Phi stays below 1 on U."""
    windows = uniform_windows(3)
    return ObservationSetup(windows=windows, delta=[0.03, 0.05, 0.04], gamma=0.05)


@pytest.fixture(scope="session")
def j2_config():
    return BenchConfig(n_dims=2, mesh_elems=32, gamma=1e-2, c_k=3.0, n_list=(8, 16, 32, 64),
                       m_list=(100, 400, 1600), mc_replicates=5, density_samples=2000,
                       quad_nodes=12)


@pytest.fixture(scope="session")
def j2_bench(j2_config):
    return build_benchmark(j2_config)


@pytest.fixture(scope="session")
def j4_bench():
    return build_benchmark(BenchConfig())
