"""Solver checks against the exhaustive enumeration oracle."""

import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from mwmlab.matching import (
    ENUMERATION_LIMIT,
    enumerate_matchings,
    matching_weight,
    max_weight_matching,
    validate_matching,
    weight_matrix,
    _scipy_tail_values,
)


def brute_force_max_weight(w):
    """Oracle: best weight over the full feasible set."""
    n, k = len(w), len(w[0])
    return max(
        sum(w[q][s] for q, s in m) for m in enumerate_matchings(n, k)
    )


def brute_force_canonical_optimum(w):
    """Oracle: lexicographically smallest positive-edge matching of best weight."""
    n, k = len(w), len(w[0])
    best_weight = brute_force_max_weight(w)
    candidates = [
        m
        for m in enumerate_matchings(n, k)
        if sum(w[q][s] for q, s in m) == best_weight
        and all(w[q][s] > 0 for q, s in m)
    ]
    return min(candidates)


def weights_strategy(max_dim=4, max_entry=5):
    return st.integers(1, max_dim).flatmap(
        lambda n: st.integers(1, max_dim).flatmap(
            lambda k: st.lists(
                st.lists(st.integers(0, max_entry), min_size=k, max_size=k),
                min_size=n,
                max_size=n,
            )
        )
    )


class TestMaxWeightMatching:
    def test_two_by_two_example(self):
        assert max_weight_matching([[3, 1], [2, 4]]) == ((0, 0), (1, 1))
        assert sum((3, 4)) == 7

    def test_all_zero_weights_give_empty_matching(self):
        assert max_weight_matching([[0, 0], [0, 0]]) == ()

    def test_single_edge(self):
        assert max_weight_matching([[5]]) == ((0, 0),)

    def test_rectangular_instances(self):
        assert max_weight_matching([[1, 2, 3]]) == ((0, 2),)
        assert max_weight_matching([[1], [2], [3]]) == ((2, 0),)

    def test_zero_weight_edges_never_included(self):
        m = max_weight_matching([[4, 0], [0, 0]])
        assert m == ((0, 0),)
        m = max_weight_matching([[0, 7], [0, 0]])
        assert m == ((0, 1),)

    def test_lexicographic_tie_break(self):
        # both diagonals weigh 2; the sorted pair tuple starting (0,0) wins
        assert max_weight_matching([[1, 1], [1, 1]]) == ((0, 0), (1, 1))

    def test_determinism(self):
        w = [[2, 2, 1], [2, 0, 2], [1, 2, 2]]
        results = {max_weight_matching(w) for _ in range(20)}
        assert len(results) == 1

    @given(weights_strategy())
    def test_weight_matches_enumeration_oracle(self, w):
        m = max_weight_matching(w)
        assert sum(w[q][s] for q, s in m) == brute_force_max_weight(w)

    @given(weights_strategy(max_dim=3, max_entry=3))
    def test_canonical_form_matches_oracle_exactly(self, w):
        assert max_weight_matching(w) == brute_force_canonical_optimum(w)

    @given(weights_strategy())
    def test_output_satisfies_matching_invariants(self, w):
        m = max_weight_matching(w)
        validate_matching(m, len(w), len(w[0]))
        assert all(w[q][s] > 0 for q, s in m)
        assert list(m) == sorted(m)

    def test_validation_errors(self):
        with pytest.raises(ValueError):
            max_weight_matching([])
        with pytest.raises(ValueError):
            max_weight_matching([[]])
        with pytest.raises(ValueError):
            max_weight_matching([[1, 2], [3]])
        with pytest.raises(ValueError):
            max_weight_matching([[1, -2]])
        with pytest.raises(ValueError):
            max_weight_matching([[1.5]])

    def test_wide_instance_uses_fallback_engine(self):
        # 17 servers exceeds the bitmask DP width; pairing (0,16) with (1,2)
        # beats giving server 16 to queue 1
        w = [[0] * 17 for _ in range(2)]
        w[0][16] = 3
        w[1][16] = 5
        w[1][2] = 4
        assert max_weight_matching(w) == ((0, 16), (1, 2))

    def test_fallback_engine_agrees_with_dp(self):
        rnd = random.Random(7)
        for _ in range(50):
            n = rnd.randint(1, 4)
            k = rnd.randint(1, 4)
            w = [[rnd.randint(0, 5) for _ in range(k)] for _ in range(n)]
            rows = [tuple(r) for r in w]
            tail = _scipy_tail_values(rows, n, k)
            full = (1 << k) - 1
            assert tail(0, full) == brute_force_max_weight(w)


class TestEnumerateMatchings:
    @pytest.mark.parametrize(
        "n,k,count", [(1, 1, 2), (2, 2, 7), (2, 1, 3), (1, 2, 3), (3, 3, 34)]
    )
    def test_counts(self, n, k, count):
        assert len(list(enumerate_matchings(n, k))) == count

    def test_unique_and_valid_and_contains_empty(self):
        ms = list(enumerate_matchings(3, 2))
        assert len(set(ms)) == len(ms)
        assert () in ms
        for m in ms:
            validate_matching(m, 3, 2)

    def test_size_guard(self):
        with pytest.raises(ValueError):
            list(enumerate_matchings(6, 5))
        assert ENUMERATION_LIMIT == 25
        # 5x5 sits exactly on the limit
        next(enumerate_matchings(5, 5))

    def test_rejects_degenerate_shapes(self):
        with pytest.raises(ValueError):
            list(enumerate_matchings(0, 3))
        with pytest.raises(ValueError):
            list(enumerate_matchings(3, 0))


class TestMatchingWeight:
    def test_examples(self):
        ones = ((1, 1), (1, 1))
        assert matching_weight((2, 1), ones, [(0, 0), (1, 1)]) == 3
        assert matching_weight((2, 1), ones, []) == 0
        assert matching_weight((2, 1), ((0, 1), (1, 0)), [(0, 0), (1, 1)]) == 0

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            matching_weight((1, 2, 3), ((1, 1), (1, 1)), [])

    def test_invalid_matchings_rejected(self):
        ones = ((1, 1), (1, 1))
        with pytest.raises(ValueError):
            matching_weight((1, 1), ones, [(0, 0), (0, 1)])
        with pytest.raises(ValueError):
            matching_weight((1, 1), ones, [(0, 0), (1, 0)])
        with pytest.raises(ValueError):
            matching_weight((1, 1), ones, [(0, 5)])
        with pytest.raises(ValueError):
            matching_weight((1, 1), ones, [(-1, 0)])

    @given(
        st.lists(st.integers(0, 5), min_size=2, max_size=4),
        st.data(),
    )
    def test_invariant_under_queue_relabeling(self, x, data):
        n = len(x)
        k = data.draw(st.integers(1, 3))
        c = data.draw(
            st.lists(
                st.lists(st.integers(0, 1), min_size=k, max_size=k),
                min_size=n,
                max_size=n,
            )
        )
        perm = data.draw(st.permutations(range(n)))
        matchings = list(enumerate_matchings(n, k))
        m = data.draw(st.sampled_from(matchings))
        base = matching_weight(x, c, m)
        # apply the same relabeling to lengths, connectivity rows, and pairs
        x2 = [x[perm[i]] for i in range(n)]
        c2 = [c[perm[i]] for i in range(n)]
        inv = {perm[i]: i for i in range(n)}
        m2 = [(inv[q], s) for q, s in m]
        assert matching_weight(x2, c2, m2) == base


class TestWeightMatrix:
    def test_products(self):
        assert weight_matrix((2, 3), ((1, 0), (0, 1))) == [[2, 0], [0, 3]]

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            weight_matrix((1,), ((1, 1), (1, 1)))
