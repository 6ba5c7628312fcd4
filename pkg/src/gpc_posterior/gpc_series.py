"""
Sparse polynomial series over the parameter box U = [-1, 1]^J.

A SparseSeries maps multi-indices to coefficients that are either scalars or
vectors (observation vectors, FE nodal vectors) in the Taylor (monomial) or
normalized Legendre basis. This module also computes the Taylor coefficients
of the parametric forward solution by the affine recursion, converts between
bases exactly, truncates to best N terms and fits algebraic decay rates.
"""

import functools
import itertools
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import (
    Dict,
    FrozenSet,
    Iterable,
    List,
    Mapping,
    Optional,
    Sequence,
    Tuple,
    Union,
)

import numpy as np
import scipy.sparse as sparse
from numpy.polynomial import legendre as npleg

from .errors import BasisError, DimensionMismatchError, NonMonotoneSetError, RateFitError
from .forward_fem import back_solve, factorize
from .models import AffineOperatorFamily
from .sparse_index import MonotoneSet, MultiIndex, is_monotone, sorted_indices

logger = logging.getLogger(__name__)

Coefficient = Union[float, np.ndarray]

# chunk of sample points evaluated at once by evaluate_series_batch
EVAL_CHUNK = 2048


class Basis(str, Enum):
    """Polynomial basis of a series."""
    TAYLOR = "taylor"
    LEGENDRE = "legendre"


def _is_zero(c: Coefficient) -> bool:
    if isinstance(c, np.ndarray):
        return not np.any(c)
    return c == 0


def _freeze(c: Coefficient) -> Coefficient:
    if isinstance(c, np.ndarray):
        arr = np.array(c, dtype=float)
        arr.setflags(write=False)
        return arr
    return float(c)


class SparseSeries:
    """
    Finite sum of coefficients times tensorized basis polynomials.

    Exact zero coefficients are never stored. Vector-valued series may carry
    a norm matrix M, in which case coefficient norms are energy norms
    sqrt(c^T M c); otherwise scalars use |c| and vectors the Euclidean norm.

    Attributes:
        basis: Basis.TAYLOR or Basis.LEGENDRE
        norm_matrix: Optional SPD matrix defining coefficient norms
    """

    def __init__(self, basis: Basis, terms: Mapping[MultiIndex, Coefficient],
                 norm_matrix: Optional[sparse.spmatrix] = None):
        self.basis = Basis(basis)
        self.norm_matrix = norm_matrix
        self._terms: Dict[MultiIndex, Coefficient] = {
            nu: _freeze(c) for nu, c in terms.items() if not _is_zero(c)
        }
        self._order: Optional[List[MultiIndex]] = None

    @classmethod
    def constant(cls, value: Coefficient, basis: Basis = Basis.TAYLOR,
                 norm_matrix: Optional[sparse.spmatrix] = None) -> "SparseSeries":
        return cls(basis, {MultiIndex.zero(): value}, norm_matrix)

    @classmethod
    def empty(cls, basis: Basis = Basis.TAYLOR) -> "SparseSeries":
        return cls(basis, {})

    def __len__(self) -> int:
        return len(self._terms)

    def __contains__(self, nu: object) -> bool:
        return nu in self._terms

    def __getitem__(self, nu: MultiIndex) -> Coefficient:
        return self._terms[nu]

    def get(self, nu: MultiIndex, default: Coefficient = 0.0) -> Coefficient:
        return self._terms.get(nu, default)

    def __repr__(self) -> str:
        return f"SparseSeries(basis={self.basis.value}, terms={len(self)})"

    def indices(self) -> List[MultiIndex]:
        """Support in canonical order."""
        if self._order is None:
            self._order = sorted_indices(self._terms)
        return list(self._order)

    def items(self) -> List[Tuple[MultiIndex, Coefficient]]:
        return [(nu, self._terms[nu]) for nu in self.indices()]

    @property
    def support(self) -> FrozenSet[MultiIndex]:
        return frozenset(self._terms)

    @property
    def is_vector_valued(self) -> bool:
        return any(isinstance(c, np.ndarray) for c in self._terms.values())

    @property
    def max_dim(self) -> int:
        return max((nu.max_dim for nu in self._terms), default=0)

    @property
    def max_degree(self) -> int:
        return max((nu.degree for nu in self._terms), default=0)

    def coefficient_norm(self, c: Coefficient) -> float:
        if isinstance(c, np.ndarray):
            if self.norm_matrix is not None:
                return float(np.sqrt(max(float(c @ (self.norm_matrix @ c)), 0.0)))
            return float(np.linalg.norm(c))
        return abs(float(c))

    def norms(self) -> np.ndarray:
        """Coefficient norms in canonical order."""
        return np.array([self.coefficient_norm(c) for _, c in self.items()])

    def lp_norm(self, p: float = 1.0) -> float:
        """(sum ||c_nu||^p)^(1/p) of the coefficient sequence (p may be below 1)."""
        norms = self.norms()
        if norms.size == 0:
            return 0.0
        return float(np.sum(norms ** p) ** (1.0 / p))

    def l1_norm(self) -> float:
        return self.lp_norm(1.0)

    def scale(self, factor: float) -> "SparseSeries":
        return SparseSeries(self.basis, {nu: factor * c for nu, c in self._terms.items()},
                            self.norm_matrix)

    def __add__(self, other: "SparseSeries") -> "SparseSeries":
        if other.basis is not self.basis:
            raise BasisError(self.basis.value, other.basis.value)
        terms = dict(self._terms)
        for nu, c in other.items():
            terms[nu] = terms[nu] + c if nu in terms else c
        norm_matrix = self.norm_matrix if self.norm_matrix is not None else other.norm_matrix
        return SparseSeries(self.basis, terms, norm_matrix)

    def restrict(self, indices: Iterable[MultiIndex]) -> "SparseSeries":
        """The terms whose index belongs to the given set."""
        keep = set(indices)
        return SparseSeries(self.basis, {nu: c for nu, c in self._terms.items() if nu in keep},
                            self.norm_matrix)

    def component(self, k: int) -> "SparseSeries":
        """Scalar series of the k-th entry of a vector-valued series."""
        return SparseSeries(self.basis, {nu: float(c[k]) for nu, c in self._terms.items()})

    def map_coefficients(self, fn, norm_matrix: Optional[sparse.spmatrix] = None) -> "SparseSeries":
        """Apply a linear map to every coefficient."""
        return SparseSeries(self.basis, {nu: fn(c) for nu, c in self._terms.items()}, norm_matrix)


@dataclass(frozen=True)
class Truncation:
    """
    Result of a truncation together with the norm mass it discarded.

    Attributes:
        series: The retained series
        dropped_mass: Sum of the norms of everything that was dropped
    """
    series: SparseSeries
    dropped_mass: float


def taylor_forward(fam: AffineOperatorFamily, lam: Union[MonotoneSet, Iterable[MultiIndex]]) -> SparseSeries:
    """
    Taylor coefficients of the parametric FE solution on a monotone set.

    Differentiating A(y) p(y) = f at y = 0 gives t_0 = A_0^-1 f and
    t_nu = -A_0^-1 sum_{j in supp nu} A_j t_{nu - e_j}; coefficients are
    computed by increasing total degree with A_0 factored once.

    Args:
        fam: Operator family
        lam: Monotone index set

    Returns:
        Vector-valued Taylor series with the A_0 energy norm

    Raises:
        NonMonotoneSetError: If lam is not monotone
        DimensionMismatchError: If lam involves a dimension beyond J
    """
    if not isinstance(lam, MonotoneSet):
        members = frozenset(lam)
        if not is_monotone(members):
            raise NonMonotoneSetError("a predecessor", context="forward index set")
        lam = MonotoneSet(members)
    if lam.max_dim > fam.n_dims:
        raise DimensionMismatchError("index set dimensions within model", fam.n_dims, lam.max_dim)

    factor = factorize(fam.a0_banded)
    coeffs: Dict[MultiIndex, np.ndarray] = {}
    for nu in lam:  # canonical order visits lower degrees first
        if nu.is_zero():
            coeffs[nu] = back_solve(factor, fam.load)
            continue
        rhs = np.zeros(fam.mesh.n_interior)
        for j in nu.support:
            rhs -= fam.ajs[j - 1] @ coeffs[nu.decrement(j)]
        coeffs[nu] = back_solve(factor, rhs)
    logger.debug("taylor recursion: %d backsolves", len(coeffs))
    return SparseSeries(Basis.TAYLOR, coeffs, norm_matrix=fam.a0)


def legendre_values(max_degree: int, x: np.ndarray) -> np.ndarray:
    """
    Normalized Legendre polynomials L_0..L_n at the sample points.

    L_k = sqrt(2k + 1) P_k has unit norm in L^2([-1, 1], dx / 2).

    Returns:
        Array of shape (len(x), max_degree + 1)
    """
    x = np.asarray(x, dtype=float).ravel()
    values = np.zeros((x.size, max_degree + 1))
    values[:, 0] = 1.0
    if max_degree >= 1:
        values[:, 1] = x
    for n in range(1, max_degree):
        values[:, n + 1] = ((2 * n + 1) * x * values[:, n] - n * values[:, n - 1]) / (n + 1)
    values *= np.sqrt(2.0 * np.arange(max_degree + 1) + 1.0)
    return values


@functools.lru_cache(maxsize=None)
def monomial_to_legendre(max_degree: int) -> np.ndarray:
    """
    Matrix M with y^n = sum_k M[n, k] L_k(y) for n, k <= max_degree.

    Entries are the projections int y^n L_k dy/2, computed with a Gauss-Legendre
    rule that is exact for the degree 2 * max_degree integrands. Entries with
    k > n or k - n odd vanish identically and are stored as exact zeros.
    """
    n_nodes = (2 * max_degree + 1 + 1) // 2 + 1
    x, w = npleg.leggauss(n_nodes)
    w = w / 2.0
    legendre = legendre_values(max_degree, x)
    powers = x[:, None] ** np.arange(max_degree + 1)[None, :]
    matrix = (powers * w[:, None]).T @ legendre
    n_idx, k_idx = np.meshgrid(np.arange(max_degree + 1), np.arange(max_degree + 1), indexing="ij")
    matrix[(k_idx > n_idx) | ((n_idx - k_idx) % 2 == 1)] = 0.0
    matrix.setflags(write=False)
    return matrix


@functools.lru_cache(maxsize=None)
def legendre_to_monomial(max_degree: int) -> np.ndarray:
    """Matrix C with L_k(y) = sum_n C[k, n] y^n."""
    matrix = np.zeros((max_degree + 1, max_degree + 1))
    for k in range(max_degree + 1):
        unit = np.zeros(k + 1)
        unit[k] = 1.0
        matrix[k, : k + 1] = np.sqrt(2.0 * k + 1.0) * npleg.leg2poly(unit)
    matrix.setflags(write=False)
    return matrix


def _check_support(s: SparseSeries, lam: Optional[Iterable[MultiIndex]]) -> None:
    if lam is None:
        return
    members = lam.members if isinstance(lam, MonotoneSet) else frozenset(lam)
    if not is_monotone(members):
        raise NonMonotoneSetError("a predecessor", context="conversion index set")
    outside = s.support - members
    if outside:
        raise NonMonotoneSetError(sorted_indices(outside)[0], context="series support within index set")


def _convert(s: SparseSeries, matrix: np.ndarray, target: Basis) -> SparseSeries:
    out: Dict[MultiIndex, Coefficient] = {}
    for nu, c in s.items():
        per_dim = [
            [(k, matrix[a, k]) for k in range(a % 2, a + 1, 2) if matrix[a, k] != 0.0]
            for _, a in nu.entries
        ]
        for combo in itertools.product(*per_dim):
            weight = math.prod(w for _, w in combo)
            mu = MultiIndex(tuple((j, k) for (j, _), (k, _) in zip(nu.entries, combo) if k))
            out[mu] = out[mu] + weight * c if mu in out else weight * c
    return SparseSeries(target, out, s.norm_matrix)


def legendre_from_taylor(s: SparseSeries, lam: Optional[Iterable[MultiIndex]] = None) -> SparseSeries:
    """
    Re-expand a Taylor series exactly in normalized Legendre polynomials.

    Because y^n involves only L_k with k <= n, the Legendre support stays
    inside any monotone set containing the Taylor support.

    Args:
        s: Taylor-basis series
        lam: Monotone set containing the support (defaults to the support
            itself, which must then be monotone)

    Raises:
        BasisError: If s is not a Taylor series
        NonMonotoneSetError: If the support is not contained in a monotone set
    """
    if s.basis is not Basis.TAYLOR:
        raise BasisError(Basis.TAYLOR.value, s.basis.value)
    _check_support(s, lam)
    if not len(s):
        return SparseSeries.empty(Basis.LEGENDRE)
    per_dim_degree = max(a for nu in s.support for _, a in nu.entries) if s.max_degree else 0
    return _convert(s, monomial_to_legendre(per_dim_degree), Basis.LEGENDRE)


def taylor_from_legendre(s: SparseSeries) -> SparseSeries:
    """Exact inverse of legendre_from_taylor."""
    if s.basis is not Basis.LEGENDRE:
        raise BasisError(Basis.LEGENDRE.value, s.basis.value)
    if not len(s):
        return SparseSeries.empty(Basis.TAYLOR)
    per_dim_degree = max(a for nu in s.support for _, a in nu.entries) if s.max_degree else 0
    # C[k, n] maps L_k to y^n; _convert reads matrix[a, k] as source degree a
    return _convert(s, legendre_to_monomial(per_dim_degree), Basis.TAYLOR)


def _basis_matrix(s: SparseSeries, points: np.ndarray, indices: Sequence[MultiIndex]) -> np.ndarray:
    degree = max((a for nu in indices for _, a in nu.entries), default=0)
    per_dim: Dict[int, np.ndarray] = {}
    for j in sorted({j for nu in indices for j in nu.support}):
        column = points[:, j - 1]
        if s.basis is Basis.TAYLOR:
            per_dim[j] = column[:, None] ** np.arange(degree + 1)[None, :]
        else:
            per_dim[j] = legendre_values(degree, column)
    matrix = np.ones((points.shape[0], len(indices)))
    for t, nu in enumerate(indices):
        for j, a in nu.entries:
            matrix[:, t] *= per_dim[j][:, a]
    return matrix


def evaluate_series_batch(s: SparseSeries, points: np.ndarray) -> np.ndarray:
    """
    Evaluate a series at many parameter points.

    Args:
        s: The series
        points: Array of shape (m, J); points outside U are allowed

    Returns:
        Array of shape (m,) for scalar series or (m, d) for vector series
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if s.max_dim > points.shape[1]:
        raise DimensionMismatchError("parameter dimensions for series", s.max_dim, points.shape[1])
    items = s.items()
    if not items:
        return np.zeros(points.shape[0])
    indices = [nu for nu, _ in items]
    coeffs = np.array([c for _, c in items], dtype=float)
    out = []
    for start in range(0, points.shape[0], EVAL_CHUNK):
        chunk = points[start:start + EVAL_CHUNK]
        out.append(_basis_matrix(s, chunk, indices) @ coeffs)
    return np.concatenate(out, axis=0)


def evaluate_series(s: SparseSeries, y: Union[Sequence[float], np.ndarray]) -> Coefficient:
    """
    Evaluate a series at one parameter point.

    Returns:
        A float for scalar series (0.0 for the empty series) or a vector
    """
    value = evaluate_series_batch(s, np.asarray(y, dtype=float).reshape(1, -1))[0]
    return float(value) if np.ndim(value) == 0 else value


def truncate_largest(s: SparseSeries, n_terms: int) -> Truncation:
    """
    Keep the n_terms coefficients of largest norm.

    Ties are broken by canonical index order. The discarded norm mass is
    returned alongside.
    """
    if n_terms < 0:
        raise ValueError(f"n_terms must be non-negative, got {n_terms}")
    items = s.items()
    if n_terms >= len(items):
        return Truncation(s, 0.0)
    norms = s.norms()
    # items are canonical, so a stable sort on -norm breaks ties canonically
    order = np.argsort(-norms, kind="stable")
    kept = {items[i][0]: items[i][1] for i in order[:n_terms]}
    dropped = float(norms[order[n_terms:]].sum())
    return Truncation(SparseSeries(s.basis, kept, s.norm_matrix), dropped)


def best_n_term_tail(s: SparseSeries, n_values: Sequence[int], q: float = 2.0) -> List[float]:
    """
    Tail (sum_{n > N} ||c||_(n)^q)^(1/q) of the decreasing rearrangement, per N.

    For a Legendre series and q = 2 this is, by Parseval, the L^2(U) error of
    the best N-term truncation.
    """
    norms = np.sort(s.norms())[::-1]
    powered = norms ** q
    # tail[N] = sum of powered[N:], accumulated from the small end
    tail = np.concatenate((np.cumsum(powered[::-1])[::-1], [0.0]))
    return [float(tail[min(n, norms.size)] ** (1.0 / q)) for n in n_values]


def stechkin_bound(sequence: Sequence[float], n_terms: int, sigma: float, q: float) -> float:
    """N^-(1/sigma - 1/q) * ||sequence||_{l^sigma}, the Stechkin majorant of the l^q tail."""
    values = np.abs(np.asarray(sequence, dtype=float))
    return float(n_terms ** (-(1.0 / sigma - 1.0 / q)) * np.sum(values ** sigma) ** (1.0 / sigma))


def fit_power_law(points: Sequence[Tuple[float, float]]) -> Tuple[float, float]:
    """
    Least-squares fit log(error) = slope * log(N) + intercept.

    Raises:
        RateFitError: With fewer than two points or non-positive values
    """
    if len(points) < 2:
        raise RateFitError(f"need at least 2 points for a rate fit, got {len(points)}")
    n = np.array([p[0] for p in points], dtype=float)
    err = np.array([p[1] for p in points], dtype=float)
    if np.any(n <= 0) or np.any(err <= 0) or not np.all(np.isfinite(err)):
        raise RateFitError(f"rate fit needs positive finite values, got {list(points)}")
    if np.unique(n).size < 2:
        raise RateFitError("rate fit needs at least two distinct N")
    slope, intercept = np.polyfit(np.log(n), np.log(err), 1)
    return float(slope), float(intercept)


def fit_decay_rate(points: Sequence[Tuple[float, float]]) -> float:
    """
    Log-log least-squares slope of (N, error) pairs.

    Raises:
        RateFitError: With fewer than three points or non-positive values
    """
    if len(points) < 3:
        raise RateFitError(f"need at least 3 points for a decay rate, got {len(points)}")
    return fit_power_law(points)[0]
