import math
from fractions import Fraction

import pytest
from scipy.stats import binom as binom_dist

from ekrcheck.combinat import KSet, RankedFamily, Universe, iter_bits, mask_of
from ekrcheck.families import enumerate_M, star, x_view
from ekrcheck.randmodel import (
    EXACT_LIMIT,
    SampleX,
    count_in,
    deviation_scan,
    exact_prob,
    mc_estimate,
    mc_estimate_batch,
    sample,
    sample_batch,
    wilson,
)


def upper_sets(view, G):
    """The (k+1)-subsets of [n] \\ {x} behind an upper-layer set of the view."""
    u = view.universe
    full = mask_of(range(1, u.n + 1))
    return [full & ~u.masks[view.upper_to_global[s]] for s in iter_bits(G)]


class TestSample:
    def test_extremes(self, u52):
        assert sample(u52, 1.0, 3).bits == u52.full
        assert sample(u52, 0.0, 3).bits == 0

    def test_invalid_p(self, u52):
        with pytest.raises(ValueError):
            sample(u52, 1.5, 0)

    def test_deterministic(self, u73):
        assert sample(u73, 0.5, 7, 12) == sample(u73, 0.5, 7, 12)
        assert sample(u73, 0.5, 7, 12).bits != sample(u73, 0.5, 7, 13).bits

    def test_mean_size(self, u52):
        rows = sample_batch(u52, 0.99, 1, 0, 10_000)
        sizes = rows.sum(axis=1)
        sigma = math.sqrt(10 * 0.99 * 0.01 / 10_000)
        assert abs(sizes.mean() - 9.9) < 3 * sigma

    @pytest.mark.parametrize("n,k", [(5, 2), (7, 3), (9, 4), (6, 3)])
    def test_batch_matches_single(self, n, k):
        u = Universe(n, k)
        rows = sample_batch(u, 0.3, 42, 5, 20)
        for i, row in enumerate(rows):
            X = sample(u, 0.3, 42, 5 + i)
            assert [X.bits >> r & 1 for r in range(u.size)] == row.astype(int).tolist()

    def test_eps(self, u52):
        assert sample(u52, 0.9, 0).eps == pytest.approx(0.1)


class TestCountIn:
    def test_upper_layer_is_star(self, u73):
        view = x_view(u73, 7)
        B = upper_sets(view, view.graph.upper_full)
        for t in range(20):
            X = sample(u73, 0.6, 1, t)
            assert count_in(X, B) == count_in(X, star(u73, 7))

    def test_contains_through_complement(self, u73):
        X = sample(u73, 0.5, 3)
        for m in u73.masks:
            comp = mask_of(range(1, 8)) & ~m
            assert X.contains(KSet(comp)) == X.contains(KSet(m))

    def test_involution(self, u73):
        # counting B in the upper layer equals counting its complements in the lower sample
        X = sample(u73, 0.5, 9)
        full = mask_of(range(1, 8))
        B = [mask_of(s) for s in ({1, 2, 3, 4}, {2, 3, 4, 5}, {4, 5, 6, 7})]
        lowers = u73.family([tuple(e for e in range(1, 8) if not (full & ~b) >> (e - 1) & 1 == 0) for b in B])
        assert count_in(X, B) == count_in(X, lowers)

    def test_mixed_layers(self, u73):
        X = sample(u73, 0.5, 0)
        with pytest.raises(ValueError):
            count_in(X, [{1, 2, 3}, {1, 2, 3, 4}])
        with pytest.raises(ValueError):
            count_in(X, [{1, 2}])
        with pytest.raises(ValueError):
            count_in(X, RankedFamily(Universe(8, 3), 1))

    def test_ajhf(self, u73):
        view = x_view(u73, 7)
        Ms = list(enumerate_M(u73))[::60]
        Kx = star(u73, 7)
        for t in range(10):
            X = sample(u73, 0.7, 5, t)
            for F in Ms:
                A = RankedFamily(u73, view.lift_lower(F.A))
                G = view.graph.upper_shadow(F.A)
                lhs = count_in(X, A) - count_in(X, RankedFamily(u73, view.lift_upper(G)))
                assert lhs == count_in(X, F.members) - count_in(X, Kx)

    def test_full_sample_excess(self, u73):
        X = sample(u73, 1.0, 0)
        view = x_view(u73, 7)
        for F in list(enumerate_M(u73))[::200]:
            G = view.graph.upper_shadow(F.A)
            a = F.A.bit_count()
            diff = count_in(X, upper_sets(view, G)) - count_in(X, RankedFamily(u73, view.lift_lower(F.A)))
            assert diff == view.graph.delta(F.A) * a


class TestEstimates:
    def test_constant_true(self, u52):
        r = mc_estimate(lambda X: True, u52, 0.5, 200, 1)
        assert r.estimate == 1.0 and r.lo < 1 and r.hi == pytest.approx(1.0)

    def test_empty_event(self, u52):
        r = mc_estimate_batch(lambda rows: ~rows.any(axis=1), u52, 0.5, 100_000, 3)
        exact = 0.5**10
        sigma = math.sqrt(exact * (1 - exact) / 100_000)
        assert abs(r.estimate - exact) < 3 * sigma

    def test_batch_equals_per_sample(self, u52):
        a = mc_estimate(lambda X: len(X) >= 6, u52, 0.6, 3000, 8)
        b = mc_estimate_batch(lambda rows: rows.sum(axis=1) >= 6, u52, 0.6, 3000, 8)
        assert a == b

    def test_threads_deterministic(self, u73):
        ev = lambda rows: rows[:, :5].all(axis=1)  # noqa: E731
        runs = {mc_estimate_batch(ev, u73, 0.7, 20_000, 4, threads=t, chunk=1000) for t in (1, 2, 4)}
        assert len(runs) == 1

    def test_wilson(self):
        lo, hi = wilson(50, 100)
        assert lo == pytest.approx(0.4038, abs=1e-4) and hi == pytest.approx(0.5962, abs=1e-4)
        lo, hi = wilson(0, 10)
        assert lo == 0 and 0 < hi < 0.35

    def test_trials_positive(self, u52):
        with pytest.raises(ValueError):
            mc_estimate(lambda X: True, u52, 0.5, 0, 1)


class TestExact:
    def test_trivial(self, u52):
        assert exact_prob(lambda F: True, u52, 0.3) == pytest.approx(1.0, rel=1e-12)
        assert exact_prob(lambda F: len(F) == 10, u52, 0.3) == pytest.approx(0.3**10, rel=1e-12)

    def test_batch_form(self, u52):
        a = exact_prob(lambda F: len(F) % 3 == 0, u52, 0.45)
        b = exact_prob(None, u52, 0.45, batch=lambda rows: rows.sum(axis=1) % 3 == 0)
        assert a == pytest.approx(b, rel=1e-12)
        exact = sum(binom_dist.pmf(i, 10, 0.45) for i in range(0, 11, 3))
        assert a == pytest.approx(exact, rel=1e-10)

    def test_guard(self):
        u = Universe(9, 4)
        assert u.size > EXACT_LIMIT
        with pytest.raises(ValueError):
            exact_prob(lambda F: True, u, 0.5)

    def test_needs_event(self, u52):
        with pytest.raises(ValueError):
            exact_prob(None, u52, 0.5)


class TestDeviation:
    def test_full_sample(self, u73):
        X = sample(u73, 1.0, 0)
        scan = deviation_scan(X, [star(u73, x) for x in range(1, 8)], eta=0.08, delta_a=2.0)
        assert not scan.union

    def test_two_readings_agree(self, u73):
        fams = [star(u73, x) for x in range(1, 8)] + [m.members for m in list(enumerate_M(u73))[::500]]
        for t in range(200):
            X = sample(u73, 0.9, 2, t)
            for e in deviation_scan(X, fams, eta=0.08, delta_a=1.5).events:
                assert e.occurred == e.complement_occurred

    def test_star_event_frequency(self, u73):
        B = star(u73, 1)
        trials, p, delta_a = 20_000, 0.9, 20.0
        hits = sum(deviation_scan(sample(u73, p, 11, t), [B], 0.08, delta_a).union for t in range(trials))
        b = len(B)
        lam = Fraction(0.08) * Fraction(delta_a) * Fraction(p)
        exact = sum(binom_dist.pmf(c, b, p) for c in range(b + 1) if abs(c - b * Fraction(p)) > lam)
        assert 0.1 < exact < 0.9
        sigma = math.sqrt(exact * (1 - exact) / trials)
        assert abs(hits / trials - exact) < 4 * sigma

    def test_threshold_exact(self, u52):
        X = SampleX(u52.family([{1, 2}]), 0.5, 0)
        B = u52.family([{1, 2}, {1, 3}])
        # |X & B| = 1 = |B| p exactly: never a deviation
        assert not deviation_scan(X, [B], eta=1e-9).union
        assert deviation_scan(X, [u52.family([{1, 3}, {1, 4}])], eta=0.5, delta_a=1.0).union
