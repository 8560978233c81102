import itertools
import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from ekrcheck.combinat import (
    KSet,
    RankedFamily,
    Universe,
    binom,
    binsum_bound,
    chernoff_bound,
    colex_rank,
    colex_unrank,
    elements_of,
    layer_masks,
    mask_of,
    rank,
    unrank,
    uppertail_bound,
)


def upper_tail(m, q, t):
    """Exact Pr(B(m, q) > t) by summation in rationals."""
    q = Fraction(q)
    return float(sum(math.comb(m, i) * q**i * (1 - q) ** (m - i) for i in range(m + 1) if i > t))


def lower_tail(m, q, t):
    q = Fraction(q)
    return float(sum(math.comb(m, i) * q**i * (1 - q) ** (m - i) for i in range(m + 1) if i < t))


class TestRanking:
    def test_colex_endpoints(self):
        u = Universe(4, 2)
        assert rank(u, {1, 2}) == 0
        assert rank(u, {3, 4}) == 5

    def test_round_trip_small(self):
        u = Universe(4, 2)
        assert [rank(u, unrank(u, i)) for i in range(6)] == list(range(6))

    def test_size(self):
        assert Universe(8, 4).size == 70
        assert len(layer_masks(8, 4)) == 70

    @pytest.mark.parametrize("n", range(1, 17))
    def test_bijection_up_to_16(self, n):
        for k in range(1, n // 2 + 1):
            masks = layer_masks(n, k)
            assert len(masks) == binom(n, k)
            assert [colex_rank(m) for m in masks] == list(range(len(masks)))

    def test_rank_independent_of_n(self):
        assert colex_rank(mask_of({2, 5, 6})) == rank(Universe(6, 3), {2, 5, 6}) == rank(Universe(9, 3), {2, 5, 6})

    def test_colex_order(self):
        masks = layer_masks(7, 3)
        keys = [sorted(elements_of(m), reverse=True) for m in masks]
        assert keys == sorted(keys)

    @given(st.integers(1, 14).flatmap(lambda n: st.tuples(st.just(n), st.integers(1, n))).flatmap(
        lambda nk: st.tuples(st.just(nk[1]), st.integers(0, binom(nk[0], nk[1]) - 1))))
    def test_unrank_inverse(self, ki):
        k, i = ki
        assert colex_rank(colex_unrank(i, k)) == i

    def test_out_of_range(self):
        u = Universe(4, 2)
        with pytest.raises(IndexError):
            unrank(u, 6)
        with pytest.raises(ValueError):
            rank(u, {1, 2, 3})
        with pytest.raises(ValueError):
            rank(u, {1, 5})

    def test_universe_guard(self):
        with pytest.raises(ValueError):
            Universe(3, 2)

    def test_pascal(self):
        for n in range(1, 65):
            for k in range(1, n):
                assert binom(n, k) == binom(n - 1, k - 1) + binom(n - 1, k)
        assert binom(64, 32) == math.comb(64, 32)
        assert binom(5, 7) == 0


class TestRankedFamily:
    def test_set_algebra(self):
        u = Universe(5, 2)
        a = u.family([{1, 2}, {1, 3}])
        b = u.family([{1, 3}, {4, 5}])
        assert (a | b).sets() == [(1, 2), (1, 3), (4, 5)]
        assert (a & b).sets() == [(1, 3)]
        assert (a - b).sets() == [(1, 2)]
        assert len(a ^ b) == 2
        assert {1, 2} in a and KSet.of(4, 5) in b and (2, 3) not in a

    def test_degree(self):
        u = Universe(5, 2)
        f = u.family([{1, 2}, {1, 3}, {2, 3}])
        assert [f.degree(i) for i in range(1, 6)] == [2, 2, 2, 0, 0]
        assert f.max_degree() == 2

    def test_mixed_universes(self):
        with pytest.raises(ValueError):
            Universe(5, 2).family() | Universe(6, 2).family()

    def test_full(self):
        assert len(RankedFamily.full(Universe(7, 3))) == 35


class TestChernoff:
    def test_zero_deviation(self):
        assert chernoff_bound(10, 0.3, 0) == (1.0, 1.0)

    def test_stated_value(self):
        upper, _ = chernoff_bound(100, 0.5, 10)
        assert upper == pytest.approx(math.exp(-100 / (2 * (50 + 10 / 3))), rel=1e-12)
        assert upper == pytest.approx(0.3916, abs=5e-5)

    def test_dominates_exact_example(self):
        assert upper_tail(100, 0.5, 60) <= chernoff_bound(100, 0.5, 10).upper

    def test_domain(self):
        for q in (0.0, 1.0, -0.1):
            with pytest.raises(ValueError):
                chernoff_bound(10, q, 1)
        with pytest.raises(ValueError):
            chernoff_bound(0, 0.5, 1)

    @given(st.integers(1, 60), st.floats(0.01, 0.99), st.floats(0, 30))
    def test_in_unit_interval(self, m, q, lam):
        b = chernoff_bound(m, q, lam)
        assert 0 < b.upper <= 1 and 0 <= b.lower <= 1


class TestUpperTail:
    def test_at_e(self):
        b = uppertail_bound(20, 0.05, math.e)
        assert b.bound == pytest.approx(1.0)
        assert not b.meaningful

    def test_stated_value(self):
        b = uppertail_bound(20, 0.05, 10)
        assert b.meaningful
        assert b.bound == pytest.approx(math.exp(-10 * math.log(10 / math.e)), rel=1e-12)
        assert math.log(b.bound) == pytest.approx(-13.026, abs=1e-3)
        assert upper_tail(20, 0.05, 10) <= b.bound

    def test_domain(self):
        with pytest.raises(ValueError):
            uppertail_bound(20, 0.05, 0)


class TestBinsum:
    def test_examples(self):
        assert 3 <= binsum_bound(1, 2) == pytest.approx(2 * math.e)
        assert sum(math.comb(10, i) for i in range(6)) == 638
        assert binsum_bound(5, 10) == pytest.approx((2 * math.e) ** 5, rel=1e-12)
        assert 638 <= binsum_bound(5, 10) < 4750

    def test_hypothesis_enforced(self):
        with pytest.raises(ValueError):
            binsum_bound(3, 5)
        with pytest.raises(ValueError):
            binsum_bound(0, 5)

    def test_exhaustive(self):
        for b in range(2, 31):
            for a in range(1, b // 2 + 1):
                assert sum(math.comb(b, i) for i in range(a + 1)) <= binsum_bound(a, b)


def test_elements_round_trip():
    for combo in itertools.combinations(range(1, 9), 3):
        assert elements_of(mask_of(combo)) == combo
