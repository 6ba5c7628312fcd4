"""
Piecewise-linear finite elements for -(u p')' = f on (0, 1), p(0) = p(1) = 0.

The stiffness matrix depends affinely on the parameter through the
coefficient, so it is assembled once per coefficient field (A_0 from the
mean, A_j from each fluctuation) and combined per parameter value. Solves use
a banded Cholesky factorization; its failure is the discrete signature of a
coefficient that is not uniformly elliptic.
"""

import dataclasses
import functools
import logging
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.sparse as sparse
from scipy.linalg import LinAlgError, cho_solve_banded, cholesky_banded
from scipy.sparse.linalg import spsolve

from .errors import DimensionMismatchError, FactorizationError
from .models import (
    AffineOperatorFamily,
    Mesh1D,
    ObservationSetup,
    ParamLike,
    PriorModel,
    as_parameter_array,
)
from .prior_model import validate_uea

logger = logging.getLogger(__name__)

SourceLike = Union[float, Callable[[np.ndarray], np.ndarray]]


def stiffness_matrix(mesh: Mesh1D, coefficient: np.ndarray) -> sparse.csr_matrix:
    """
    Assemble the interior stiffness matrix of a piecewise-constant coefficient.

    Element e contributes (w_e / h) * [[1, -1], [-1, 1]]; rows and columns of
    the two boundary nodes are removed.

    Args:
        mesh: The mesh
        coefficient: One value per element

    Returns:
        Symmetric tridiagonal matrix of size n_elems - 1
    """
    w = np.asarray(coefficient, dtype=float)
    if w.shape[0] != mesh.n_elems:
        raise DimensionMismatchError("coefficient length", mesh.n_elems, w.shape[0])
    diag = (w[:-1] + w[1:]) / mesh.h
    off = -w[1:-1] / mesh.h
    n = mesh.n_interior
    return sparse.diags([off, diag, off], [-1, 0, 1], shape=(n, n), format="csr")


def load_vector(mesh: Mesh1D, source: SourceLike) -> np.ndarray:
    """Load vector of the source term by element midpoint quadrature."""
    if callable(source):
        f_mid = np.asarray(source(mesh.midpoints), dtype=float) * np.ones(mesh.n_elems)
    else:
        f_mid = np.full(mesh.n_elems, float(source))
    # each hat function takes the value 1/2 at both neighbouring midpoints
    return 0.5 * mesh.h * (f_mid[:-1] + f_mid[1:])


def assemble(model: PriorModel, mesh: Mesh1D, source: SourceLike = 1.0) -> AffineOperatorFamily:
    """
    Assemble the affine operator family of a prior.

    Args:
        model: Prior whose mean and fluctuations define A_0 and A_j
        mesh: Mesh to assemble on (must match the model's mesh)
        source: Constant value or callable f(x) for the right-hand side

    Returns:
        The AffineOperatorFamily

    Raises:
        DimensionMismatchError: If mesh and model disagree in element count
        UEAViolationError: If the prior is not uniformly elliptic
    """
    if model.mesh.n_elems != mesh.n_elems:
        raise DimensionMismatchError("model element count", mesh.n_elems, model.mesh.n_elems)
    a_min, a_max = validate_uea(model)

    a0 = stiffness_matrix(mesh, model.abar)
    ajs = [stiffness_matrix(mesh, psi) for psi in model.psis]
    laplacian = stiffness_matrix(mesh, np.ones(mesh.n_elems))
    load = load_vector(mesh, source)

    logger.debug("assembled %d affine terms on %d elements", len(ajs) + 1, mesh.n_elems)
    return AffineOperatorFamily(
        mesh=mesh,
        a0=a0,
        ajs=ajs,
        load=load,
        laplacian=laplacian,
        a_min=a_min,
        a_max=a_max,
        psi_sup_norms=model.psi_sup_norms,
    )


def factorize(banded: np.ndarray) -> np.ndarray:
    """
    Cholesky factor of an SPD matrix in upper band storage.

    Raises:
        FactorizationError: If the matrix is not positive definite
    """
    try:
        return cholesky_banded(banded, lower=False)
    except LinAlgError as e:
        raise FactorizationError(str(e)) from e


def back_solve(factor: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve with a factor returned by factorize."""
    return cho_solve_banded((factor, False), rhs)


def solve_at(fam: AffineOperatorFamily, y: ParamLike) -> np.ndarray:
    """
    Solve A(y) p = load at one parameter value.

    Args:
        fam: The operator family
        y: Parameter in U

    Returns:
        Interior nodal values of the FE solution

    Raises:
        FactorizationError: If A(y) is not positive definite
    """
    y_arr = as_parameter_array(y, fam.n_dims)
    factor = factorize(fam.banded_at(y_arr))
    return back_solve(factor, fam.load)


def solve_batch(fam: AffineOperatorFamily, samples: np.ndarray) -> np.ndarray:
    """
    Solve at every row of a sample array.

    Returns:
        Array of shape (m, n_elems - 1), one FE solution per row
    """
    samples = np.asarray(samples, dtype=float)
    if samples.ndim == 1:
        samples = samples.reshape(1, -1)
    if samples.shape[1] != fam.n_dims:
        raise DimensionMismatchError("sample columns", fam.n_dims, samples.shape[1])
    solutions = np.empty((samples.shape[0], fam.mesh.n_interior))
    for i, y in enumerate(samples):
        solutions[i] = back_solve(factorize(fam.banded_at(y)), fam.load)
    return solutions


def dual_norm(fam: AffineOperatorFamily, functional: np.ndarray) -> float:
    """Discrete V* norm sqrt(l^T K^-1 l) of a functional given by its nodal weights."""
    return float(np.sqrt(functional @ spsolve(fam.laplacian.tocsc(), functional)))


def uniform_windows(n_obs: int) -> Tuple[Tuple[float, float], ...]:
    """K windows centred at k / (K + 1) with half-width 1 / (4 (K + 1))."""
    if n_obs < 1:
        raise ValueError(f"n_obs must be at least 1, got {n_obs}")
    half = 0.25 / (n_obs + 1)
    centres = np.arange(1, n_obs + 1) / (n_obs + 1)
    return tuple((float(c - half), float(c + half)) for c in centres)


def observation_matrix(setup: ObservationSetup, mesh: Mesh1D) -> np.ndarray:
    """
    Weights of the window-average functionals on the interior nodes.

    For a piecewise-linear p the integral over each element overlap equals the
    overlap length times p at the overlap midpoint, so the weights reproduce
    the window averages exactly.

    Returns:
        Read-only array of shape (K, n_elems - 1)
    """
    return _window_weights(setup.windows, mesh)


@functools.lru_cache(maxsize=64)
def _window_weights(windows: Tuple[Tuple[float, float], ...], mesh: Mesh1D) -> np.ndarray:
    nodes = mesh.nodes
    weights = np.zeros((len(windows), mesh.n_elems + 1))
    for k, (lo, hi) in enumerate(windows):
        first = max(int(np.floor(lo / mesh.h)), 0)
        last = min(int(np.ceil(hi / mesh.h)), mesh.n_elems)
        for e in range(first, last):
            left = max(lo, nodes[e])
            right = min(hi, nodes[e + 1])
            if right <= left:
                continue
            t = (0.5 * (left + right) - nodes[e]) / mesh.h
            weights[k, e] += (right - left) * (1.0 - t)
            weights[k, e + 1] += (right - left) * t
        weights[k] /= hi - lo
    interior = weights[:, 1:-1].copy()
    interior.setflags(write=False)
    return interior


def observe(setup: ObservationSetup, p: np.ndarray, mesh: Optional[Mesh1D] = None) -> np.ndarray:
    """
    Apply the K window-average functionals to an FE solution.

    Args:
        setup: Observation windows
        p: Interior nodal values
        mesh: Mesh of p; inferred from the length of p if omitted

    Returns:
        Observation vector of length K
    """
    if mesh is None:
        mesh = Mesh1D(p.shape[0] + 1)
    elif p.shape[0] != mesh.n_interior:
        raise DimensionMismatchError("interior nodal vector", mesh.n_interior, p.shape[0])
    return observation_matrix(setup, mesh) @ p


def observation_map(setup: ObservationSetup, fam: AffineOperatorFamily, y: ParamLike) -> np.ndarray:
    """The parameter-to-observation map y -> O(G(u(y)))."""
    return observe(setup, solve_at(fam, y), fam.mesh)


def potential_exact(setup: ObservationSetup, fam: AffineOperatorFamily, y: ParamLike) -> float:
    """
    Least-squares data misfit Phi(y) = 1/2 sum_k (delta_k - G_k(y))^2 / gamma_k.
    """
    misfit = setup.delta - observation_map(setup, fam, y)
    return 0.5 * float(np.sum(misfit ** 2 / setup.gamma))


def synthesize_data(setup: ObservationSetup, fam: AffineOperatorFamily, y_truth: ParamLike,
                    noise_seed: int) -> ObservationSetup:
    """
    Generate delta = G(y_truth) + eta with eta ~ N(0, Gamma).

    Args:
        setup: Template providing windows and noise variances (its delta is ignored)
        fam: Operator family
        y_truth: Ground-truth parameter
        noise_seed: Seed of the noise generator

    Returns:
        A new ObservationSetup carrying the synthetic data and y_truth
    """
    y_arr = as_parameter_array(y_truth, fam.n_dims)
    rng = np.random.default_rng(noise_seed)
    eta = rng.normal(0.0, np.sqrt(setup.gamma))
    delta = observation_map(setup, fam, y_arr) + eta
    return dataclasses.replace(setup, delta=delta, y_truth=y_arr)


def lipschitz_constant(setup: ObservationSetup, fam: AffineOperatorFamily) -> float:
    """
    Lipschitz constant of y -> G(y) in the sup norm on U.

    L = (||f||_* / a_min^2) * (sum_k ||o_k||_*^2)^(1/2) * sum_j ||psi_j||_inf,
    with discrete dual norms, so |G(y) - G(y')| <= L ||y - y'||_inf holds for
    the discrete problem.
    """
    obs = observation_matrix(setup, fam.mesh)
    obs_norm = np.sqrt(sum(dual_norm(fam, row) ** 2 for row in obs))
    return dual_norm(fam, fam.load) / fam.a_min ** 2 * obs_norm * float(fam.psi_sup_norms.sum())


def fe_error(mesh: Mesh1D, p: np.ndarray, exact: Callable[[np.ndarray], np.ndarray]) -> float:
    """
    Max error of the piecewise-linear solution against an analytic solution.

    The error is sampled at the nodes and at the element midpoints. In 1D the
    P1 Galerkin solution of a constant-coefficient problem is nodally exact,
    so the midpoint samples carry the O(h^2) interpolation error.
    """
    full = mesh.with_boundary(p)
    nodal = np.abs(full - exact(mesh.nodes)).max()
    mid_values = 0.5 * (full[:-1] + full[1:])
    midpoint = np.abs(mid_values - exact(mesh.midpoints)).max()
    return float(max(nodal, midpoint))


def h_convergence(n_elems_list: Sequence[int], coefficient: float = 1.0,
                  source: float = 1.0) -> List[Tuple[int, float]]:
    """
    FE errors for -(u p')' = f with constant u and f on a sequence of meshes.

    The analytic solution is p(x) = f x (1 - x) / (2 u).

    Returns:
        List of (n_elems, max error) pairs
    """
    def exact(x: np.ndarray) -> np.ndarray:
        return source * x * (1.0 - x) / (2.0 * coefficient)

    results = []
    for n_elems in n_elems_list:
        mesh = Mesh1D(n_elems)
        model = PriorModel(mesh=mesh, abar=np.full(n_elems, coefficient), psis=[])
        fam = assemble(model, mesh, source)
        p = solve_at(fam, [])
        results.append((n_elems, fe_error(mesh, p, exact)))
    return results
