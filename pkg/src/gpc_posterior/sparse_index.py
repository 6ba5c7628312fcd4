"""
Finitely supported multi-indices and monotone (downward-closed) index sets.

A MultiIndex stores only its nonzero entries as sorted (dimension, exponent)
pairs with 1-based dimensions, so indices over many parameters stay small.
Canonical order is total degree first, then lexicographic on the pairs; every
tie-break in the library (truncation, product selection, CSV output) uses it.
"""

import logging
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple

from .errors import IndexSetSizeError, NonMonotoneSetError

logger = logging.getLogger(__name__)

DEFAULT_MAX_CARDINALITY = 200_000


@dataclass(frozen=True)
class MultiIndex:
    """
    A multi-index nu with finite support.

    Attributes:
        entries: Sorted (dimension, exponent) pairs, dimensions 1-based,
            exponents positive
    """
    entries: Tuple[Tuple[int, int], ...] = ()

    def __post_init__(self):
        """Validate sortedness and positivity of the stored entries."""
        entries = tuple((int(j), int(a)) for j, a in self.entries)
        previous = 0
        for j, a in entries:
            if j <= previous:
                raise ValueError(f"dimensions must be increasing and >= 1, got {entries}")
            if a <= 0:
                raise ValueError(f"stored exponents must be positive, got {entries}")
            previous = j
        object.__setattr__(self, "entries", entries)

    @classmethod
    def zero(cls) -> "MultiIndex":
        return cls(())

    @classmethod
    def unit(cls, j: int) -> "MultiIndex":
        """The unit index e_j."""
        return cls(((j, 1),))

    @classmethod
    def from_dict(cls, mapping: Mapping[int, int]) -> "MultiIndex":
        """Build from a {dimension: exponent} mapping; zero exponents are dropped."""
        return cls(tuple(sorted((j, a) for j, a in mapping.items() if a != 0)))

    @classmethod
    def from_dense(cls, exponents: Sequence[int]) -> "MultiIndex":
        """Build from a dense exponent vector (position 0 is dimension 1)."""
        return cls(tuple((j + 1, int(a)) for j, a in enumerate(exponents) if a != 0))

    @classmethod
    def parse(cls, text: str) -> "MultiIndex":
        """
        Parse the "j1^a1 j2^a2" text form; "0" denotes the zero index.

        Raises:
            ValueError: If the text is malformed
        """
        text = text.strip()
        if text in ("", "0"):
            return cls.zero()
        mapping: Dict[int, int] = {}
        for token in text.split():
            dim, sep, exp = token.partition("^")
            if not sep:
                raise ValueError(f"malformed multi-index token {token!r}")
            mapping[int(dim)] = mapping.get(int(dim), 0) + int(exp)
        return cls.from_dict(mapping)

    def to_string(self) -> str:
        if not self.entries:
            return "0"
        return " ".join(f"{j}^{a}" for j, a in self.entries)

    def __str__(self) -> str:
        return self.to_string()

    def as_dict(self) -> Dict[int, int]:
        return dict(self.entries)

    def get(self, j: int) -> int:
        """Exponent nu_j (0 if j is outside the support)."""
        for dim, a in self.entries:
            if dim == j:
                return a
        return 0

    @property
    def degree(self) -> int:
        """Total degree |nu|_1."""
        return sum(a for _, a in self.entries)

    @property
    def support(self) -> Tuple[int, ...]:
        """The dimensions with nonzero exponent."""
        return tuple(j for j, _ in self.entries)

    @property
    def max_dim(self) -> int:
        return self.entries[-1][0] if self.entries else 0

    def is_zero(self) -> bool:
        return not self.entries

    def sort_key(self) -> Tuple[int, Tuple[Tuple[int, int], ...]]:
        """Canonical ordering key: total degree, then the (dim, exponent) pairs."""
        return (self.degree, self.entries)

    def __add__(self, other: "MultiIndex") -> "MultiIndex":
        mapping = self.as_dict()
        for j, a in other.entries:
            mapping[j] = mapping.get(j, 0) + a
        return MultiIndex(tuple(sorted(mapping.items())))

    def decrement(self, j: int) -> "MultiIndex":
        """
        nu - e_j.

        Raises:
            ValueError: If nu_j is zero
        """
        mapping = self.as_dict()
        if mapping.get(j, 0) == 0:
            raise ValueError(f"cannot decrement dimension {j} of {self}")
        mapping[j] -= 1
        return MultiIndex.from_dict(mapping)

    def predecessors(self) -> List["MultiIndex"]:
        """All nu - e_j for j in the support."""
        return [self.decrement(j) for j in self.support]


def sorted_indices(indices: Iterable[MultiIndex]) -> List[MultiIndex]:
    """Indices in canonical order."""
    return sorted(indices, key=MultiIndex.sort_key)


def _first_missing(members: FrozenSet[MultiIndex]) -> Optional[MultiIndex]:
    if MultiIndex.zero() not in members:
        return MultiIndex.zero()
    for nu in sorted_indices(members):
        for pred in nu.predecessors():
            if pred not in members:
                return pred
    return None


def is_monotone(indices: Iterable[MultiIndex]) -> bool:
    """
    Check the two monotonicity properties of an index set.

    (M1) the zero index belongs to the set; (M2) with nu, every nu - e_j for
    j in the support of nu belongs to the set.
    """
    return _first_missing(frozenset(indices)) is None


@dataclass(frozen=True)
class MonotoneSet:
    """
    A finite downward-closed set of multi-indices.

    Attributes:
        members: The indices

    Raises:
        NonMonotoneSetError: On construction from a set that is not monotone
    """
    members: FrozenSet[MultiIndex]

    def __post_init__(self):
        members = frozenset(self.members)
        missing = _first_missing(members)
        if missing is not None:
            raise NonMonotoneSetError(missing)
        object.__setattr__(self, "members", members)

    def __len__(self) -> int:
        return len(self.members)

    def __contains__(self, nu: object) -> bool:
        return nu in self.members

    def __iter__(self) -> Iterator[MultiIndex]:
        return iter(sorted_indices(self.members))

    @property
    def max_degree(self) -> int:
        return max(nu.degree for nu in self.members)

    @property
    def max_dim(self) -> int:
        return max(nu.max_dim for nu in self.members)


def downward_close(indices: Iterable[MultiIndex]) -> MonotoneSet:
    """
    Smallest monotone set containing the given indices and the zero index.
    """
    closed = {MultiIndex.zero()}
    stack = list(indices)
    while stack:
        nu = stack.pop()
        if nu in closed:
            continue
        closed.add(nu)
        stack.extend(nu.predecessors())
    return MonotoneSet(frozenset(closed))


def minkowski_sum(a: MonotoneSet, b: MonotoneSet) -> MonotoneSet:
    """
    The set {nu + nu' : nu in a, nu' in b}.

    The sum of two monotone sets is monotone; construction as a MonotoneSet
    asserts it.
    """
    return MonotoneSet(frozenset(nu + mu for nu in a.members for mu in b.members))


def total_degree_set(n_dims: int, max_degree: float, weights: Optional[Sequence[float]] = None,
                     max_cardinality: int = DEFAULT_MAX_CARDINALITY) -> MonotoneSet:
    """
    Anisotropic total-degree set {nu : sum_j w_j nu_j <= max_degree}.

    Args:
        n_dims: Number of dimensions J
        max_degree: Weighted degree budget
        weights: Per-dimension weights, each at least 1 (default all ones)
        max_cardinality: Overflow guard

    Returns:
        The monotone set

    Raises:
        ValueError: If a weight is below 1 or the lengths disagree
        IndexSetSizeError: If the set would exceed max_cardinality
    """
    if weights is None:
        weights = [1.0] * n_dims
    weights = [float(w) for w in weights]
    if len(weights) != n_dims:
        raise ValueError(f"expected {n_dims} weights, got {len(weights)}")
    if any(w < 1.0 for w in weights):
        raise ValueError(f"weights must be at least 1, got {weights}")

    tol = 1e-12 * max(1.0, abs(max_degree))
    members: List[MultiIndex] = []

    def extend(dim: int, budget: float, entries: Tuple[Tuple[int, int], ...]) -> None:
        if dim > n_dims:
            members.append(MultiIndex(entries))
            if len(members) > max_cardinality:
                raise IndexSetSizeError(max_cardinality)
            return
        w = weights[dim - 1]
        exponent = 0
        while exponent * w <= budget + tol:
            extended = entries + ((dim, exponent),) if exponent else entries
            extend(dim + 1, budget - exponent * w, extended)
            exponent += 1

    if max_degree >= 0:
        extend(1, float(max_degree), ())
    else:
        members.append(MultiIndex.zero())
    logger.debug("total degree set J=%d degree=%g has %d members", n_dims, max_degree, len(members))
    return MonotoneSet(frozenset(members))


def greedy_monotone_selection(scores: Mapping[MultiIndex, float], budget: int) -> MonotoneSet:
    """
    Monotone set of at most budget indices favouring large scores.

    Indices are scanned by decreasing score (canonical order breaks ties);
    each is added together with its downward closure whenever the closure
    still fits in the budget.

    Args:
        scores: Score per candidate index (e.g. coefficient norms)
        budget: Maximum cardinality (at least 1)

    Returns:
        Monotone set containing the zero index
    """
    if budget < 1:
        raise ValueError(f"budget must be at least 1, got {budget}")
    ranked = sorted(scores.items(), key=lambda item: (-item[1], item[0].sort_key()))
    selected = {MultiIndex.zero()}
    for nu, _ in ranked:
        if len(selected) >= budget:
            break
        if nu in selected:
            continue
        closure = downward_close([nu]).members - selected
        if len(selected) + len(closure) <= budget:
            selected |= closure
    return MonotoneSet(frozenset(selected))
