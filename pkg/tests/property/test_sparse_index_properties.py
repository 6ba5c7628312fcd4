"""
Property-based tests for the multi-index algebra.

Tests monotonicity checks, downward closure and Minkowski sums against
brute-force evaluation on dense exponent tuples.
"""

import itertools
from math import comb

import pytest
from hypothesis import given, settings, strategies as st

from gpc_posterior.sparse_index import (
    MultiIndex,
    downward_close,
    greedy_monotone_selection,
    is_monotone,
    minkowski_sum,
    total_degree_set,
)


@st.composite
def dense_index_sets(draw, max_dims=3, max_exponent=3, max_size=8):
    """Generate a dimension count and a set of dense exponent tuples."""
    n_dims = draw(st.integers(min_value=1, max_value=max_dims))
    exponent = st.integers(min_value=0, max_value=max_exponent)
    tuples = draw(st.sets(st.tuples(*[exponent] * n_dims), max_size=max_size))
    return n_dims, tuples


def brute_force_monotone(tuples, n_dims):
    if tuple([0] * n_dims) not in tuples:
        return False
    for t in tuples:
        for j in range(n_dims):
            if t[j] > 0:
                pred = t[:j] + (t[j] - 1,) + t[j + 1:]
                if pred not in tuples:
                    return False
    return True


def as_indices(tuples):
    return [MultiIndex.from_dense(t) for t in tuples]


class TestMonotoneSetProperties:
    """Property-based tests for monotone index sets."""

    @settings(max_examples=1000, deadline=None)
    @given(dense_index_sets())
    def test_is_monotone_matches_brute_force(self, drawn):
        """
        Property: Monotonicity check

        is_monotone agrees with the dense definition: zero index present and
        closed under decrementing any positive entry.
        """
        n_dims, tuples = drawn
        assert is_monotone(as_indices(tuples)) == brute_force_monotone(tuples, n_dims)

    @settings(max_examples=1000, deadline=None)
    @given(dense_index_sets())
    def test_downward_closure(self, drawn):
        """
        Property: Downward closure

        The closure is monotone, contains the input, and equals the set of
        all dense tuples dominated by some input tuple.
        """
        n_dims, tuples = drawn
        closed = downward_close(as_indices(tuples))
        assert is_monotone(closed.members)
        assert all(nu in closed for nu in as_indices(tuples))

        expected = {tuple([0] * n_dims)}
        for t in tuples:
            expected.update(itertools.product(*[range(a + 1) for a in t]))
        assert closed.members == frozenset(as_indices(expected))

    @settings(max_examples=1000, deadline=None)
    @given(dense_index_sets(max_size=5), dense_index_sets(max_size=5))
    def test_minkowski_sum(self, first, second):
        """
        Property: Minkowski sum

        The sum of two monotone sets is monotone, contains both summands and
        has at most |a| * |b| members.
        """
        a = downward_close(as_indices(first[1]))
        b = downward_close(as_indices(second[1]))
        total = minkowski_sum(a, b)
        assert is_monotone(total.members)
        assert a.members <= total.members
        assert b.members <= total.members
        assert len(total) <= len(a) * len(b)

    @given(st.integers(min_value=1, max_value=4), st.integers(min_value=0, max_value=6))
    def test_total_degree_cardinality(self, n_dims, degree):
        """
        Property: Total-degree set size

        The isotropic total-degree set has binomial(J + d, d) members.
        """
        assert len(total_degree_set(n_dims, degree)) == comb(n_dims + degree, degree)

    @given(
        st.dictionaries(
            st.tuples(st.integers(0, 3), st.integers(0, 3)).map(MultiIndex.from_dense),
            st.floats(min_value=0.0, max_value=10.0, allow_nan=False),
            max_size=12,
        ),
        st.integers(min_value=1, max_value=10),
    )
    def test_greedy_selection_within_budget(self, scores, budget):
        """
        Property: Greedy selection

        The selection is monotone, holds the zero index and respects the budget.
        """
        selected = greedy_monotone_selection(scores, budget)
        assert MultiIndex.zero() in selected
        assert is_monotone(selected.members)
        assert len(selected) <= budget


@pytest.mark.parametrize("text", ["0", "1^2", "1^1 3^4"])
def test_text_form_round_trip(text):
    assert MultiIndex.parse(text).to_string() == text


@settings(max_examples=50)
@given(st.lists(st.integers(0, 4), min_size=1, max_size=4),
       st.lists(st.integers(0, 4), min_size=1, max_size=4))
def test_addition_is_componentwise(a, b):
    """Sparse addition agrees with dense componentwise addition."""
    width = max(len(a), len(b))
    a_dense = a + [0] * (width - len(a))
    b_dense = b + [0] * (width - len(b))
    expected = MultiIndex.from_dense([x + y for x, y in zip(a_dense, b_dense)])
    assert MultiIndex.from_dense(a) + MultiIndex.from_dense(b) == expected
