import itertools
import math

import pytest

from ekrcheck.combinat import Universe, binom, iter_bits
from ekrcheck.families import (
    check_frankl,
    decompose,
    enumerate_admissible,
    enumerate_M,
    enumerate_M_bruteforce,
    family_summary,
    frankl_family,
    from_closed,
    hilton_milner,
    is_admissible,
    is_intersecting,
    is_maximal_intersecting,
    is_principal,
    read_families,
    read_family,
    star,
    write_families,
    write_family,
    x_view,
)


def maximal_intersecting_oracle(u):
    """All maximal intersecting families by subset enumeration (tiny universes only)."""
    masks = u.masks
    out = []
    for bits in range(1, 1 << u.size):
        members = [masks[r] for r in iter_bits(bits)]
        if any(not a & b for a, b in itertools.combinations(members, 2)):
            continue
        outside = [m for r, m in enumerate(masks) if not bits >> r & 1]
        if all(any(not m & a for a in members) for m in outside):
            out.append(bits)
    return out


@pytest.fixture(scope="module")
def M52(u52):
    return list(enumerate_M(u52))


@pytest.fixture(scope="module")
def M73(u73):
    return list(enumerate_M(u73))


class TestStars:
    def test_sizes(self, u52, u73):
        assert len(star(u52, 1)) == 4
        assert len(star(u73, 1)) == 15

    @pytest.mark.parametrize("n,k", [(5, 2), (7, 3), (6, 2), (8, 3)])
    def test_intersecting_maximal(self, n, k):
        u = Universe(n, k)
        for x in range(1, n + 1):
            s = star(u, x)
            assert len(s) == binom(n - 1, k - 1)
            assert is_intersecting(s) and is_maximal_intersecting(s) and is_principal(s)

    def test_range(self, u52):
        with pytest.raises(ValueError):
            star(u52, 6)


class TestIntersecting:
    def test_triangle(self, u52):
        t = u52.family([{1, 2}, {2, 3}, {1, 3}])
        assert is_intersecting(t) and is_maximal_intersecting(t) and not is_principal(t)

    def test_star_plus_edge(self, u52):
        f = star(u52, 1) | u52.family([{2, 3}])
        assert not is_intersecting(f)

    def test_empty(self, u52):
        e = u52.family()
        assert is_intersecting(e) and not is_maximal_intersecting(e)

    def test_oracle_52(self, u52):
        oracle = maximal_intersecting_oracle(u52)
        stars = {star(u52, x).members for x in range(1, 6)}
        assert len(oracle) == 15
        assert set(oracle) - stars == {F.members for F in enumerate_M_bruteforce(u52)}


class TestCorrespondence:
    def test_from_closed_triangle(self, u52):
        view = x_view(u52, 5)
        lg = view.graph
        A = lg.closure(view.drop_lower(u52.family([{1, 2}]).members))
        F = from_closed(u52, 5, A)
        assert set(F.members.sets()) == {(1, 2), (1, 5), (2, 5)}

    def test_empty_rejected(self, u52):
        with pytest.raises(ValueError):
            from_closed(u52, 5, 0)

    def test_non_admissible_rejected(self, u52):
        lg = x_view(u52, 5).graph
        full = lg.lower_full
        with pytest.raises(ValueError):
            from_closed(u52, 5, full)

    def test_count_52(self, u52, M52):
        assert len(M52) == 10
        assert {F.members.members for F in M52} == {F.members for F in enumerate_M_bruteforce(u52)}
        assert max(len(F) for F in M52) == 3 < 4

    def test_count_73(self, u73, M73):
        assert len(M73) == 6120
        assert {F.members.members for F in M73} == {F.members for F in enumerate_M_bruteforce(u73)}
        summary = family_summary(u73, (len(F) for F in M73))
        assert summary["histogram"] == {7: 30, 10: 3185, 11: 2100, 12: 630, 13: 175}
        assert summary["max_size"] == 13 < summary["star_size"] == 15

    def test_members_valid_73(self, M73):
        for F in M73:
            assert is_maximal_intersecting(F.members) and not is_principal(F.members)

    @pytest.mark.parametrize("which", ["u52", "u73"])
    def test_round_trip_every_x(self, which, request):
        u = request.getfixturevalue(which)
        lgs = {x: x_view(u, x).graph for x in range(1, u.n + 1)}
        for H in enumerate_M_bruteforce(u):
            for x in range(1, u.n + 1):
                d = decompose(H, x)
                assert d.A and is_admissible(lgs[x], d.A)
                assert from_closed(u, x, d.A).members == H

    def test_size_bookkeeping(self, u73, M73):
        lg = x_view(u73, u73.n).graph
        for F in M73:
            G = lg.upper_shadow(F.A)
            assert len(F) == u73.M - G.bit_count() + F.A.bit_count()
            d = decompose(F.members, F.witness_x)
            assert len(d.J) == G.bit_count() and d.G == G

    def test_closed_without_pairs_admissible(self, lg3):
        for C in lg3.enumerate_closed():
            if lg3.is_intersecting(C) and C.bit_count() > 0:
                stars = {sum(1 << r for r, m in enumerate(lg3.lower_masks) if m >> e & 1) for e in range(6)}
                assert is_admissible(lg3, C) == (C not in stars)

    def test_admissible_not_closed_example(self, u52):
        view = x_view(u52, 5)
        A = view.drop_lower(u52.family([{1, 2}, {1, 3}, {2, 3}]).members)
        assert is_admissible(view.graph, A) and not view.graph.is_closed(A)

    def test_closed_count_differs(self, lg2, lg3):
        # nonempty closed sets versus encodings of M: 11 vs 10 and 6114 vs 6120
        assert sum(1 for _ in lg2.enumerate_closed()) == 11
        assert sum(1 for _ in enumerate_admissible(lg2)) == 10
        assert sum(1 for _ in enumerate_admissible(lg3)) == 6120

    def test_degree_lower_bound(self, M52, M73):
        for Ms in (M52, M73):
            for F in Ms:
                u = F.members.universe
                assert F.members.max_degree() * u.n >= u.k * len(F)

    def test_ajhf_identity(self, M73, u73, rng):
        for F in M73[::50]:
            for x in (1, 4, 7):
                d = decompose(F.members, x)
                view = x_view(u73, x)
                A = view.lift_lower(d.A)
                Kx = star(u73, x).members
                for _ in range(10):
                    X = rng.getrandbits(u73.size)
                    lhs = (X & A).bit_count() - (X & d.J.members).bit_count()
                    rhs = (X & F.members.members).bit_count() - (X & Kx).bit_count()
                    assert lhs == rhs

    def test_guards(self):
        with pytest.raises(ValueError):
            next(enumerate_M(Universe(6, 2)))
        with pytest.raises(ValueError):
            next(enumerate_M(Universe(11, 5)))

    def test_bruteforce_other_n(self):
        u = Universe(6, 2)
        with pytest.warns(UserWarning):
            fams = list(enumerate_M_bruteforce(u))
        # on [6] the only nonprincipal maximal 2-cliques are the 20 triangles
        assert len(fams) == math.comb(6, 3)


class TestExtremal:
    def test_frankl_size(self, u73):
        F = frankl_family(u73, 3)
        assert len(F) == 13 and is_intersecting(F)
        degrees = [F.degree(e) for e in range(1, 8)]
        assert F.max_degree() == max(degrees) == 9  # C(6,2) - C(4,2) sets through 1

    def test_frankl_passes(self, u73):
        assert check_frankl(u73, 3)
        assert check_frankl(u73, 4)

    def test_frankl_range(self, u73):
        with pytest.raises(ValueError):
            frankl_family(u73, 2)
        with pytest.raises(ValueError):
            frankl_family(u73, 5)

    def test_hilton_milner(self, u73):
        H = hilton_milner(u73, 1, {2, 3, 4})
        assert len(H) == 1 + 15 - math.comb(3, 2) == 13
        assert is_intersecting(H) and not is_principal(H)

    def test_hilton_milner_extends_uniquely(self, u73):
        H = hilton_milner(u73, 1, {2, 3, 4})
        containing = [F for F in enumerate_M_bruteforce(u73) if F.members & H.members == H.members]
        assert len(containing) == 1
        d = decompose(H, 1)
        assert from_closed(u73, 1, x_view(u73, 1).graph.closure(d.A)).members == containing[0] == H

    def test_hilton_milner_errors(self, u73):
        with pytest.raises(ValueError):
            hilton_milner(u73, 2, {2, 3, 4})
        with pytest.raises(ValueError):
            hilton_milner(u73, 1, {2, 3})


class TestFiles:
    def test_round_trip(self, tmp_path, u73, M73):
        path = tmp_path / "one.txt"
        write_family(path, M73[5].members)
        assert read_family(path) == M73[5].members
        many = tmp_path / "many.txt"
        assert write_families(many, (F.members for F in M73[:20]), u73) == 20
        assert read_families(many) == [F.members for F in M73[:20]]

    def test_format(self, tmp_path, u52):
        path = tmp_path / "t.txt"
        write_family(path, u52.family([{2, 3}, {1, 2}]))
        assert path.read_text() == "# n=5 k=2\n1 2\n2 3\n"

    def test_blank_lines(self, tmp_path):
        path = tmp_path / "t.txt"
        path.write_text("# n=5 k=2\n\n1 2\n\n3 1\n")
        assert read_family(path).sets() == [(1, 2), (1, 3)]

    @pytest.mark.parametrize("text", ["1 2\n", "# n=5 k=2\n1 2 3\n", "# n=5 k=2\n1 9\n", "# k=2\n1 2\n"])
    def test_malformed(self, tmp_path, text):
        path = tmp_path / "bad.txt"
        path.write_text(text)
        with pytest.raises(ValueError):
            read_family(path)
