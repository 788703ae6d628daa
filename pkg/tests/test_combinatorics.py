import itertools
import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from permcap.combinatorics import (
    GroupSizes,
    PairCase,
    SwapTriple,
    count_at_distance,
    distance_weights,
    inner_product_at_swap,
    log_binom,
    log_orbit_size,
    pair_census,
    pair_config_count,
    r3_range,
    swap_distance,
    triple_config_count,
    triple_table,
)
from permcap.errors import DomainError
from permcap.estimators import standardized_labels
from permcap.oracle import orbit_subsets

SMALL_DESIGNS = [(m0, m1) for m0 in range(1, 5) for m1 in range(1, 5) if m0 + m1 >= 4]


def brute_census(g):
    """Ordered pairs of allocations classified against the center, by enumeration."""
    center = np.array([0] * g.m0 + [1] * g.m1)
    pts = []
    for ones in orbit_subsets(g.n, g.m1):
        v = np.zeros(g.n, dtype=int)
        v[list(ones)] = 1
        pts.append(v)
    dist = [swap_distance(center, p) for p in pts]
    tally = Counter()
    for i, a in enumerate(pts):
        for j, b in enumerate(pts):
            ci, cj = dist[i] == 0, dist[j] == 0
            if ci and cj:
                key = (PairCase.BOTH_CENTER, 0, 0, 0)
            elif ci or cj:
                r = dist[j] if ci else dist[i]
                key = (PairCase.ONE_CENTER, r, r, r)
            elif i == j:
                key = (PairCase.SAME_POINT, dist[i], dist[i], 0)
            else:
                key = (PairCase.DISTINCT, dist[i], dist[j], swap_distance(a, b))
            tally[key] += 1
    return tally


class TestGroupSizes:
    def test_properties(self):
        g = GroupSizes(3, 5)
        assert (g.n, g.d, g.m_min, g.n_orbit) == (8, 6, 3, 56)
        assert g.log_n_orbit == pytest.approx(math.log(56), rel=1e-15)

    @pytest.mark.parametrize("m0,m1", [(0, 5), (1, 2), (2.5, 3)])
    def test_rejects(self, m0, m1):
        with pytest.raises(DomainError):
            GroupSizes(m0, m1)


class TestInnerProduct:
    def test_matches_standardized_vectors(self):
        g = GroupSizes(4, 6)
        center = np.array([0] * 4 + [1] * 6)
        xc = standardized_labels(center)
        for ones in orbit_subsets(10, 6)[::7]:
            v = np.zeros(10, dtype=int)
            v[list(ones)] = 1
            r = swap_distance(center, v)
            np.testing.assert_allclose(xc @ standardized_labels(v), inner_product_at_swap(r, g), atol=1e-14)

    def test_balanced_extreme_is_exactly_minus_one(self):
        assert inner_product_at_swap(5, GroupSizes(5, 5)) == -1.0

    def test_out_of_range(self):
        with pytest.raises(DomainError):
            inner_product_at_swap(4, GroupSizes(3, 5))


class TestOrbitSize:
    def test_exact_and_log_agree(self):
        log_n, exact = log_orbit_size(GroupSizes(18, 11))
        assert exact == math.comb(29, 11)
        assert log_n == pytest.approx(math.log(exact), rel=1e-14)

    def test_huge_orbit_has_no_exact_integer(self):
        log_n, exact = log_orbit_size(GroupSizes(100, 100))
        assert exact is None
        np.testing.assert_allclose(log_n, math.lgamma(201) - 2 * math.lgamma(101), rtol=1e-13)

    def test_log_binom_outside_support(self):
        assert log_binom(5, 6) == -math.inf
        assert log_binom(5, -1) == -math.inf


class TestCensus:
    @pytest.mark.parametrize("m0,m1", SMALL_DESIGNS)
    def test_matches_brute_force(self, m0, m1):
        g = GroupSizes(m0, m1)
        brute = brute_census(g)
        rows = {(c, r1, r2, r3): lc for c, r1, r2, r3, lc in pair_census(g)}
        assert set(rows) == set(brute)
        for key, count in brute.items():
            assert round(math.exp(rows[key])) == count, key

    @pytest.mark.parametrize("m0,m1", SMALL_DESIGNS)
    def test_partition_of_all_pairs(self, m0, m1):
        g = GroupSizes(m0, m1)
        total = sum(round(math.exp(lc)) for *_, lc in pair_census(g))
        assert total == g.n_orbit**2

    @pytest.mark.parametrize("m0,m1", [(3, 7), (6, 6), (9, 4)])
    def test_table_matches_scalar_route(self, m0, m1):
        g = GroupSizes(m0, m1)
        t = triple_table(g)
        for r1, r2, r3, lc in zip(t.r1, t.r2, t.r3, t.log_count):
            assert r3 in r3_range(int(r1), int(r2), g)
            np.testing.assert_allclose(lc, triple_config_count(int(r1), int(r2), int(r3), g), rtol=1e-13)

    def test_table_is_read_only(self):
        t = triple_table(GroupSizes(4, 4))
        with pytest.raises(ValueError):
            t.r1[0] = 9

    def test_swap_triple_validation(self):
        g = GroupSizes(3, 3)
        SwapTriple(1, 2, 1).validate(g)
        with pytest.raises(DomainError):
            SwapTriple(1, 1, 3).validate(g)

    def test_pair_config_outside_support(self):
        assert pair_config_count(2, 2, 3, 0, GroupSizes(4, 4)) == -math.inf


@settings(max_examples=60, deadline=None)
@given(m0=st.integers(1, 60), m1=st.integers(1, 60))
def test_vandermonde(m0, m1):
    if m0 + m1 < 4:
        return
    g = GroupSizes(m0, m1)
    exact = sum(math.comb(m0, r) * math.comb(m1, r) for r in range(g.m_min + 1))
    assert exact == g.n_orbit
    np.testing.assert_allclose(distance_weights(g).sum(), 1.0, rtol=1e-12)


@settings(max_examples=25, deadline=None)
@given(m0=st.integers(2, 25), m1=st.integers(2, 25))
def test_second_point_closure(m0, m1):
    """Fixing x1 at distance r1, the other N - 2 points are all accounted for."""
    g = GroupSizes(m0, m1)
    t = triple_table(g)
    for r1 in range(1, g.m_min + 1):
        sel = t.r1 == r1
        got = np.exp(t.log_count[sel] - count_at_distance(r1, g)).sum()
        np.testing.assert_allclose(got, g.n_orbit - 2, rtol=1e-11)


def test_swap_distance_symmetric_small():
    for a, b in itertools.product(orbit_subsets(6, 3), repeat=2):
        va, vb = np.zeros(6, int), np.zeros(6, int)
        va[list(a)] = 1
        vb[list(b)] = 1
        assert swap_distance(va, vb) == swap_distance(vb, va)
