"""
Core data models for the gpc posterior library.

This module defines the mesh, parameter, prior, operator and observation
containers shared by the forward solver, the series machinery and the
Bayesian layer. All containers are immutable after construction.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.sparse as sparse

from .errors import (
    DimensionMismatchError,
    ObservationWindowError,
    ParameterRangeError,
)


@dataclass(frozen=True)
class Mesh1D:
    """
    Uniform mesh of the unit interval D = (0, 1).

    Attributes:
        n_elems: Number of elements (at least 2, so that there is an
            interior node)
    """
    n_elems: int

    def __post_init__(self):
        """Validate the element count."""
        if self.n_elems < 2:
            raise ValueError(f"n_elems must be at least 2, got {self.n_elems}")

    @property
    def h(self) -> float:
        """Element width."""
        return 1.0 / self.n_elems

    @property
    def nodes(self) -> np.ndarray:
        """The n_elems + 1 equispaced nodes, endpoints included."""
        return np.linspace(0.0, 1.0, self.n_elems + 1)

    @property
    def midpoints(self) -> np.ndarray:
        """Element midpoints, where piecewise-constant fields are sampled."""
        return (np.arange(self.n_elems) + 0.5) * self.h

    @property
    def n_interior(self) -> int:
        """Number of interior (free) nodes under homogeneous Dirichlet conditions."""
        return self.n_elems - 1

    def with_boundary(self, p: np.ndarray) -> np.ndarray:
        """Extend an interior nodal vector by the zero boundary values."""
        if p.shape[0] != self.n_interior:
            raise DimensionMismatchError("interior nodal vector", self.n_interior, p.shape[0])
        return np.concatenate(([0.0], p, [0.0]))


@dataclass(frozen=True)
class ParamVector:
    """
    A point y of the parameter box U = [-1, 1]^J.

    Attributes:
        y: The J coordinates
    """
    y: Tuple[float, ...]

    def __post_init__(self):
        """Check that every coordinate lies in [-1, 1]."""
        object.__setattr__(self, "y", tuple(float(v) for v in self.y))
        for j, value in enumerate(self.y):
            if not -1.0 <= value <= 1.0:
                raise ParameterRangeError(j, value)

    def __len__(self) -> int:
        return len(self.y)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.y, dtype=float)


ParamLike = Union[ParamVector, Sequence[float], np.ndarray]


def as_parameter_array(y: ParamLike, n_dims: int, check_box: bool = True) -> np.ndarray:
    """
    Convert a parameter vector to a float array of the expected length.

    Args:
        y: ParamVector, sequence or array of coordinates
        n_dims: Expected number of coordinates
        check_box: Whether to require every coordinate in [-1, 1]

    Returns:
        1-D float array of length n_dims

    Raises:
        DimensionMismatchError: If the length is wrong
        ParameterRangeError: If check_box and a coordinate leaves [-1, 1]
    """
    arr = y.as_array() if isinstance(y, ParamVector) else np.asarray(y, dtype=float).ravel()
    if arr.shape[0] != n_dims:
        raise DimensionMismatchError("parameter vector length", n_dims, arr.shape[0])
    if check_box:
        outside = np.flatnonzero(np.abs(arr) > 1.0)
        if outside.size:
            raise ParameterRangeError(int(outside[0]), float(arr[outside[0]]))
    return arr


@dataclass(frozen=True, eq=False)
class PriorModel:
    """
    Affine-parametric diffusion coefficient u(x, y) = abar(x) + sum_j y_j psi_j(x).

    Fields are piecewise constant: one value per mesh element, sampled at the
    element midpoints.

    Attributes:
        mesh: Mesh the fields live on
        abar: Mean field, shape (n_elems,)
        psis: Fluctuations, shape (J, n_elems)
        decay_b: Decay exponent b of the fluctuation amplitudes, if built
            from the decay law
        scale_c: Scale c with ||psi_j||_inf = c * j^-(1+b), if built from
            the decay law
        kappa: Ellipticity margin kappa in (0, 1), if specified
    """
    mesh: Mesh1D
    abar: np.ndarray
    psis: np.ndarray
    decay_b: Optional[float] = None
    scale_c: Optional[float] = None
    kappa: Optional[float] = None

    def __post_init__(self):
        """Normalize array shapes and check positivity of the mean field."""
        abar = np.asarray(self.abar, dtype=float).ravel()
        psis = np.atleast_2d(np.asarray(self.psis, dtype=float))
        if psis.size == 0:
            psis = np.zeros((0, abar.shape[0]))
        if abar.shape[0] != self.mesh.n_elems:
            raise DimensionMismatchError("mean field length", self.mesh.n_elems, abar.shape[0])
        if psis.shape[1] != self.mesh.n_elems:
            raise DimensionMismatchError("fluctuation length", self.mesh.n_elems, psis.shape[1])
        if np.any(abar <= 0.0):
            raise ValueError(f"abar must be positive, minimum is {abar.min()!r}")
        if self.kappa is not None and not 0.0 < self.kappa < 1.0:
            raise ValueError(f"kappa must lie in (0, 1), got {self.kappa}")
        abar.setflags(write=False)
        psis.setflags(write=False)
        object.__setattr__(self, "abar", abar)
        object.__setattr__(self, "psis", psis)

    @property
    def n_dims(self) -> int:
        """Number J of parameters."""
        return self.psis.shape[0]

    @property
    def abar_min(self) -> float:
        return float(self.abar.min())

    @property
    def psi_sup_norms(self) -> np.ndarray:
        """Discrete sup norms max_x |psi_j(x)| over element midpoints."""
        if self.n_dims == 0:
            return np.zeros(0)
        return np.abs(self.psis).max(axis=1)

    @property
    def nominal_sup_norms(self) -> np.ndarray:
        """
        Sup norms of the continuous fluctuations.

        For models built from the decay law these are c * j^-(1+b) exactly;
        otherwise the discrete midpoint norms are returned.
        """
        if self.scale_c is None or self.decay_b is None:
            return self.psi_sup_norms
        j = np.arange(1, self.n_dims + 1, dtype=float)
        return self.scale_c * j ** (-(1.0 + self.decay_b))


@dataclass(frozen=True, eq=False)
class AffineOperatorFamily:
    """
    Stiffness matrices realizing A(y) = A_0 + sum_j y_j A_j.

    Matrices act on the interior nodes of the mesh. Besides the sparse
    matrices, the family keeps their tridiagonal band storage, which is what
    the direct solver factorizes.

    Attributes:
        mesh: The mesh the family was assembled on
        a0: Stiffness matrix of the mean field
        ajs: Stiffness matrices of the fluctuations
        load: Load vector of the source term
        laplacian: Unit-coefficient stiffness matrix (the discrete V inner product)
        a_min: Certified lower bound of u(x, y) over D x U
        a_max: Certified upper bound of u(x, y) over D x U
        psi_sup_norms: Discrete sup norms of the fluctuations
    """
    mesh: Mesh1D
    a0: sparse.csr_matrix
    ajs: List[sparse.csr_matrix]
    load: np.ndarray
    laplacian: sparse.csr_matrix
    a_min: float
    a_max: float
    psi_sup_norms: np.ndarray
    a0_banded: np.ndarray = field(init=False, repr=False)
    ajs_banded: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        """Precompute band storage for the direct tridiagonal solver."""
        object.__setattr__(self, "a0_banded", to_upper_banded(self.a0))
        n = self.mesh.n_interior
        if self.ajs:
            stacked = np.stack([to_upper_banded(a) for a in self.ajs])
        else:
            stacked = np.zeros((0, 2, n))
        object.__setattr__(self, "ajs_banded", stacked)

    @property
    def n_dims(self) -> int:
        return len(self.ajs)

    def banded_at(self, y: np.ndarray) -> np.ndarray:
        """Upper band storage of A(y)."""
        if self.n_dims == 0:
            return self.a0_banded.copy()
        return self.a0_banded + np.tensordot(y, self.ajs_banded, axes=1)


def to_upper_banded(matrix: sparse.spmatrix) -> np.ndarray:
    """
    Convert a symmetric tridiagonal matrix to LAPACK upper band storage.

    Returns:
        Array of shape (2, n): row 0 holds the superdiagonal (first entry
        unused), row 1 the diagonal.
    """
    matrix = sparse.csr_matrix(matrix)
    n = matrix.shape[0]
    ab = np.zeros((2, n))
    ab[1] = matrix.diagonal()
    if n > 1:
        ab[0, 1:] = matrix.diagonal(1)
    return ab


@dataclass(frozen=True, eq=False)
class ObservationSetup:
    """
    Window-average observations o_k(p) = |I_k|^-1 * integral of p over I_k.

    Attributes:
        windows: K subintervals (lo, hi) of [0, 1]
        delta: Observed data, shape (K,)
        gamma: Noise variances (diagonal of Gamma), shape (K,)
        y_truth: Parameter used to synthesize delta, if known
    """
    windows: Tuple[Tuple[float, float], ...]
    delta: np.ndarray
    gamma: np.ndarray
    y_truth: Optional[np.ndarray] = None

    def __post_init__(self):
        """Validate windows and noise variances."""
        windows = tuple((float(lo), float(hi)) for lo, hi in self.windows)
        if not windows:
            raise ValueError("at least one observation window is required")
        for k, (lo, hi) in enumerate(windows):
            if not 0.0 <= lo < hi <= 1.0:
                raise ObservationWindowError(k, (lo, hi))
        delta = np.asarray(self.delta, dtype=float).ravel()
        gamma = np.asarray(self.gamma, dtype=float).ravel()
        if gamma.shape[0] == 1 and len(windows) > 1:
            gamma = np.full(len(windows), gamma[0])
        if delta.shape[0] != len(windows):
            raise DimensionMismatchError("data vector length", len(windows), delta.shape[0])
        if gamma.shape[0] != len(windows):
            raise DimensionMismatchError("noise variance count", len(windows), gamma.shape[0])
        if np.any(gamma <= 0.0):
            raise ValueError(f"noise variances must be positive, got {gamma.tolist()}")
        object.__setattr__(self, "windows", windows)
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "gamma", gamma)

    @property
    def n_obs(self) -> int:
        """Number K of observation functionals."""
        return len(self.windows)
