import itertools

import numpy as np
import pytest

from ekrcheck.combinat import binom
from ekrcheck.sperner import (
    ORACLE_LIMIT,
    check_shadow_events,
    check_wwXX,
    cube_from_sets,
    is_antichain,
    level_pair,
    replay_antichain,
    sample_cube,
    shadow_events_bruteforce,
    width,
    width_bruteforce,
)


def small_sample(n, seed, trial, limit=ORACLE_LIMIT):
    """A random subset of 2^[n] with at most ``limit`` members."""
    rng = np.random.default_rng([seed, trial])
    size = int(rng.integers(1, min(limit, 2**n) + 1))
    picks = rng.choice(2**n, size=size, replace=False)
    return cube_from_sets(n, [[e + 1 for e in range(n) if int(m) >> e & 1] for m in picks])


class TestSamples:
    def test_extremes(self):
        assert len(sample_cube(5, 1.0, 0)) == 32
        assert len(sample_cube(5, 0.0, 0)) == 0

    def test_deterministic(self):
        assert sample_cube(7, 0.5, 3, 4) == sample_cube(7, 0.5, 3, 4)

    def test_guards(self):
        with pytest.raises(ValueError):
            sample_cube(21, 0.5, 0)
        with pytest.raises(ValueError):
            sample_cube(4, 1.5, 0)
        with pytest.raises(ValueError):
            cube_from_sets(3, [[4]])

    def test_levels_and_complement(self):
        X = sample_cube(6, 0.5, 1)
        assert sum(len(X.level(i)) for i in range(7)) == len(X)
        Y = X.complement()
        assert sorted(63 ^ m for m in X.members()) == Y.members()
        assert Y.complement() == X


class TestWidth:
    @pytest.mark.parametrize("n", range(0, 9))
    def test_full_cube(self, n):
        r = width(sample_cube(n, 1.0, 0))
        assert r.width == binom(n, n // 2) == r.layer_max
        assert r.certified

    def test_chain(self):
        X = cube_from_sets(5, [[], [1], [1, 2], [1, 2, 3], [1, 2, 3, 4]])
        assert width(X).width == 1 == width_bruteforce(X)

    def test_empty(self):
        assert width(cube_from_sets(3, [])).width == 0

    def test_certificates(self):
        for t in range(30):
            X = sample_cube(6, 0.5, 2, t)
            r = width(X)
            assert r.certified and is_antichain(r.antichain)
            assert set(r.antichain) <= set(X.members())
            covered = sorted(m for c in r.chains for m in c)
            assert covered == X.members()
            for c in r.chains:
                assert all(a & ~b == 0 and a != b for a, b in zip(c, c[1:]))
            assert r.width >= r.layer_max

    @pytest.mark.parametrize("n", [4, 5, 6, 7])
    def test_oracle(self, n):
        for t in range(50):
            X = small_sample(n, n, t)
            assert width(X).width == width_bruteforce(X)

    def test_oracle_guard(self):
        with pytest.raises(ValueError):
            width_bruteforce(sample_cube(6, 1.0, 0))

    def test_is_antichain(self):
        assert is_antichain([0b011, 0b101, 0b110])
        assert not is_antichain([0b001, 0b011])


class TestWwXX:
    @pytest.mark.parametrize("n", [2, 4, 6])
    def test_full_even(self, n):
        assert check_wwXX(sample_cube(n, 1.0, 0))

    def test_missing_middle(self):
        X = cube_from_sets(5, [s for i in (0, 1, 4, 5) for s in itertools.combinations(range(1, 6), i)])
        assert width(X).layer_max == 0 and width(X).width == 5
        assert not check_wwXX(X)


class TestShadowEvents:
    @pytest.mark.parametrize("n", range(1, 8))
    def test_full(self, n):
        assert check_shadow_events(sample_cube(n, 1.0, 0)).holds

    @pytest.mark.parametrize("n,p,trials", [(4, 0.6, 40), (5, 0.7, 40), (5, 0.9, 40), (6, 0.8, 10), (6, 0.95, 10)])
    def test_oracle(self, n, p, trials):
        for t in range(trials):
            X = sample_cube(n, p, 7, t)
            fast, slow = check_shadow_events(X), shadow_events_bruteforce(X)
            assert [c.holds for c in fast.checks] == [c.holds for c in slow.checks]

    def test_witness_violates(self):
        for t in range(200):
            X = sample_cube(6, 0.6, 9, t)
            for c in check_shadow_events(X).violations:
                assert c.witness
                up = {m | 1 << e for m in c.witness for e in range(6) if not m >> e & 1}
                down = {m & ~(1 << e) for m in c.witness for e in range(6) if m >> e & 1}
                shadow = up if c.event == "X1" else down
                assert sum(s in X for s in shadow) <= sum(m in X for m in c.witness)

    def test_oracle_guard(self):
        with pytest.raises(ValueError):
            shadow_events_bruteforce(sample_cube(7, 0.5, 0))

    @pytest.mark.parametrize("n,p", [(5, 0.9), (6, 0.9), (7, 0.95), (7, 0.99)])
    def test_implication(self, n, p):
        held = 0
        for t in range(60):
            X = sample_cube(n, p, 17, t)
            if check_shadow_events(X).holds:
                held += 1
                assert check_wwXX(X)
        assert held > 0

    def test_level_pair(self):
        lp = level_pair(5, 2)
        assert len(lp.lower_masks) == 10 and len(lp.upper_masks) == 10
        assert lp.closure(0) == 0 and lp.closure(1) == 1


class TestReplay:
    def test_full_cube(self):
        X = sample_cube(6, 1.0, 0)
        r = replay_antichain(X, width(X).antichain)
        assert r.outcome == "middle"

    def test_never_improves_when_events_hold(self):
        for n, p in ((5, 0.9), (6, 0.9), (7, 0.97)):
            for t in range(40):
                X = sample_cube(n, p, 23, t)
                if check_shadow_events(X).holds:
                    r = replay_antichain(X, width(X).antichain)
                    assert r.outcome in {"middle", "two-levels"}

    def test_improves_off_middle(self):
        X = sample_cube(4, 1.0, 0)
        r = replay_antichain(X, [0b0001, 0b0010])
        assert r.outcome == "improved" and len(r.antichain) > 2 and is_antichain(r.antichain)

    def test_rejects_non_antichain(self):
        X = sample_cube(4, 1.0, 0)
        with pytest.raises(ValueError):
            replay_antichain(X, [0b0001, 0b0011])
