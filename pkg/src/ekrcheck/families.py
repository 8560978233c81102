"""Intersecting families of k-subsets of ``[n]``, mostly with ``n = 2k+1``.

For a fixed element ``x`` the k-sets avoiding ``x`` are the lower layer of
the bigraph on ``[n] \\ {x}`` (relabelled as ``[2k]``), and a (k+1)-set ``T``
avoiding ``x`` stands for the k-set ``[n] \\ T``, which contains ``x``.
Under this view a nonprincipal maximal intersecting family ``H`` is encoded
by ``A = H \\ K_x`` and recovered as ``(K_x \\ N(A)^c) + A``.

The encodings that occur are exactly the *admissible* lower sets: nonempty,
free of complementary pairs, not the star of a point of ``[2k]``, and such
that every ``s`` in the closure of ``A`` but outside ``A`` has its complement
in ``A``.  Closed sets without complementary pairs are admissible, but some
admissible sets are not closed; the smallest example is the triangle
``{12, 13, 23}`` in ``[5]`` viewed from ``x = 5``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Iterator

from .cliques import maximal_cliques
from .combinat import RankedFamily, Universe, binom, elements_of, iter_bits, layer_index, mask_of
from .layergraph import LayerGraph, layer_graph

__all__ = [
    "XView",
    "x_view",
    "Decomposition",
    "MaximalFamily",
    "star",
    "is_intersecting",
    "is_maximal_intersecting",
    "is_principal",
    "disjointness_graph",
    "decompose",
    "is_admissible",
    "from_closed",
    "enumerate_admissible",
    "enumerate_M",
    "enumerate_M_bruteforce",
    "frankl_family",
    "check_frankl",
    "hilton_milner",
    "write_family",
    "write_families",
    "read_families",
    "read_family",
]

M_LIMIT_K = 4


class XView:
    """Translation between ``C([n], k)`` ranks and the layer graph seen from ``x``."""

    def __init__(self, universe: Universe, x: int) -> None:
        n, k = universe.n, universe.k
        if n != 2 * k + 1:
            raise ValueError(f"the layer-graph view needs n = 2k+1, got n={n}, k={k}")
        if not 1 <= x <= n:
            raise ValueError(f"x={x} outside [1, {n}]")
        self.universe = universe
        self.x = x
        self.graph: LayerGraph = layer_graph(k)
        others = [e for e in range(1, n + 1) if e != x]
        gidx = layer_index(n, k)
        full = mask_of(range(1, n + 1))

        def lift(local_mask: int) -> int:
            return mask_of(others[b] for b in iter_bits(local_mask))

        self.lower_to_global = [gidx[lift(m)] for m in self.graph.lower_masks]
        self.upper_to_global = [gidx[full & ~lift(m)] for m in self.graph.upper_masks]
        self.global_to_lower = {g: r for r, g in enumerate(self.lower_to_global)}
        self.global_to_upper = {g: s for s, g in enumerate(self.upper_to_global)}
        self.star = sum(1 << g for g in self.upper_to_global)

    def lift_lower(self, A: int) -> int:
        table = self.lower_to_global
        return sum(1 << table[r] for r in iter_bits(A))

    def lift_upper(self, G: int) -> int:
        """Global family ``G^c`` for an upper-layer set ``G``."""
        table = self.upper_to_global
        return sum(1 << table[s] for s in iter_bits(G))

    def drop_lower(self, F: int) -> int:
        """Local lower set of the members of ``F`` avoiding ``x``."""
        table = self.global_to_lower
        return sum(1 << table[g] for g in iter_bits(F & ~self.star))

    def drop_upper(self, F: int) -> int:
        """Local upper set ``{[n] \\ T : T in F, x in T}``."""
        table = self.global_to_upper
        return sum(1 << table[g] for g in iter_bits(F & self.star))


@lru_cache(maxsize=None)
def x_view(universe: Universe, x: int) -> XView:
    return XView(universe, x)


@dataclass(frozen=True)
class Decomposition:
    x: int
    A: int  # local lower set, H \ K_x
    J: RankedFamily  # K_x \ H
    G: int  # local upper set N(A)


@dataclass(frozen=True)
class MaximalFamily:
    members: RankedFamily
    witness_x: int
    A: int

    def __len__(self) -> int:
        return len(self.members)


def star(universe: Universe, x: int) -> RankedFamily:
    if not 1 <= x <= universe.n:
        raise ValueError(f"x={x} outside [1, {universe.n}]")
    bit = 1 << (x - 1)
    bits = sum(1 << r for r, m in enumerate(universe.masks) if m & bit)
    return RankedFamily(universe, bits)


@lru_cache(maxsize=None)
def _stars(universe: Universe) -> tuple[int, ...]:
    return tuple(star(universe, x).members for x in range(1, universe.n + 1))


@lru_cache(maxsize=None)
def disjointness_graph(universe: Universe) -> tuple[int, ...]:
    """For each rank, the bitset of ranks whose k-sets are disjoint from it."""
    masks = universe.masks
    return tuple(
        sum(1 << s for s, o in enumerate(masks) if not m & o) for m in masks
    )


def _family_bits(F: RankedFamily | int) -> int:
    return F.members if isinstance(F, RankedFamily) else F


def is_intersecting(F: RankedFamily) -> bool:
    disjoint = disjointness_graph(F.universe)
    bits = F.members
    return all(not disjoint[r] & bits for r in iter_bits(bits))


def is_maximal_intersecting(F: RankedFamily) -> bool:
    if not is_intersecting(F):
        return False
    disjoint = disjointness_graph(F.universe)
    bits = F.members
    outside = F.universe.full & ~bits
    return all(disjoint[r] & bits for r in iter_bits(outside))


def is_principal(F: RankedFamily) -> bool:
    return F.members in _stars(F.universe)


def decompose(H: RankedFamily, x: int) -> Decomposition:
    view = x_view(H.universe, x)
    A = view.drop_lower(H.members)
    J = RankedFamily(H.universe, view.star & ~H.members)
    return Decomposition(x, A, J, view.graph.upper_shadow(A))


@lru_cache(maxsize=None)
def _local_stars(k: int) -> frozenset[int]:
    lg = layer_graph(k)
    out = set()
    for e in range(lg.ground):
        out.add(sum(1 << r for r, m in enumerate(lg.lower_masks) if m >> e & 1))
    return frozenset(out)


def is_admissible(graph: LayerGraph, A: int) -> bool:
    """Whether ``A`` encodes a member of M (see the module docstring)."""
    if A == 0 or A in _local_stars(graph.k):
        return False
    comp = graph.complement_set(A)
    if A & comp:
        return False
    return graph.closure(A) & ~A & ~comp == 0


def from_closed(universe: Universe, x: int, A: int, *, check: bool = True) -> MaximalFamily:
    """The family ``(K_x \\ N(A)^c) + A``; ``A`` must be admissible."""
    view = x_view(universe, x)
    if A == 0:
        raise ValueError("A is empty: the construction gives the star K_x, which is not in M")
    if check and not is_admissible(view.graph, A):
        raise ValueError("A does not encode a nonprincipal maximal intersecting family")
    J = view.lift_upper(view.graph.upper_shadow(A))
    bits = (view.star & ~J) | view.lift_lower(A)
    return MaximalFamily(RankedFamily(universe, bits), x, A)


def enumerate_admissible(graph: LayerGraph) -> Iterator[int]:
    """Every admissible lower set, grouped by closure.

    Each admissible ``A`` has a closed closure ``C`` with ``N(A) = N(C)``;
    inside ``C`` it keeps every element whose complement is absent and
    exactly one element from each complementary pair.
    """
    stars = _local_stars(graph.k)
    comp = graph.complement
    for C in graph.enumerate_closed(min_size=1):
        pairs = [r for r in iter_bits(C) if r < comp[r] and C >> comp[r] & 1]
        paired = sum((1 << r) | (1 << comp[r]) for r in pairs)
        single = C & ~paired
        target = graph.upper_shadow(C)
        for choice in range(1 << len(pairs)):
            A = single
            for i, r in enumerate(pairs):
                A |= 1 << (comp[r] if choice >> i & 1 else r)
            if A in stars or A == 0:
                continue
            if graph.upper_shadow(A) == target:
                yield A


def enumerate_M(universe: Universe) -> Iterator[MaximalFamily]:
    """Each nonprincipal maximal intersecting family exactly once (witness ``x = n``)."""
    if universe.n != 2 * universe.k + 1:
        raise ValueError("enumerate_M needs n = 2k+1; use enumerate_M_bruteforce otherwise")
    if universe.k > M_LIMIT_K:
        raise ValueError(f"enumeration of M is limited to k <= {M_LIMIT_K}")
    x = universe.n
    view = x_view(universe, x)
    for A in enumerate_admissible(view.graph):
        yield from_closed(universe, x, A, check=False)


def enumerate_M_bruteforce(universe: Universe) -> Iterator[RankedFamily]:
    """Nonprincipal maximal intersecting families as maximal cliques of the intersection graph."""
    if universe.size > 64:
        raise ValueError("brute-force enumeration limited to C(n,k) <= 64")
    if universe.n != 2 * universe.k + 1:
        warnings.warn("n != 2k+1: layer-graph machinery does not apply", stacklevel=2)
    full = universe.full
    disjoint = disjointness_graph(universe)
    adj = [full & ~d & ~(1 << r) for r, d in enumerate(disjoint)]
    stars = set(_stars(universe))
    for clique in maximal_cliques(adj):
        if clique not in stars:
            yield RankedFamily(universe, clique)


def frankl_family(universe: Universe, i: int) -> RankedFamily:
    """``{A : 1 in A, A meets {2..i}} + {A : A contains {2..i}}``."""
    if not 3 <= i <= universe.k + 1:
        raise ValueError(f"i must lie in [3, k+1], got {i}")
    block = mask_of(range(2, i + 1))
    bits = 0
    for r, m in enumerate(universe.masks):
        if (m & 1 and m & block) or m & block == block:
            bits |= 1 << r
    return RankedFamily(universe, bits)


def check_frankl(universe: Universe, i: int) -> bool:
    """Every maximal clique larger than ``F_i`` has larger maximum degree."""
    F = frankl_family(universe, i)
    size, top = len(F), F.max_degree()
    candidates: Iterable[RankedFamily]
    if universe.n == 2 * universe.k + 1:
        candidates = (H.members for H in enumerate_M(universe))
    else:
        candidates = enumerate_M_bruteforce(universe)
    stars = [star(universe, x) for x in range(1, universe.n + 1)]
    for H in [*stars, *candidates]:
        if len(H) > size and H.max_degree() <= top:
            return False
    return True


def hilton_milner(universe: Universe, x: int, A: Iterable[int]) -> RankedFamily:
    """``{A} + {B : x in B, B meets A}``."""
    amask = mask_of(A)
    if amask.bit_count() != universe.k:
        raise ValueError("A must be a k-set")
    xbit = 1 << (x - 1)
    if amask & xbit:
        raise ValueError("x must not belong to A")
    bits = 0
    for r, m in enumerate(universe.masks):
        if m == amask or (m & xbit and m & amask):
            bits |= 1 << r
    return RankedFamily(universe, bits)


# family files


def _format_family(F: RankedFamily) -> list[str]:
    return [" ".join(map(str, s)) for s in sorted(F.sets())]


def write_family(path: str | Path, F: RankedFamily) -> None:
    u = F.universe
    lines = [f"# n={u.n} k={u.k}", *_format_family(F)]
    Path(path).write_text("\n".join(lines) + "\n")


def write_families(path: str | Path, families: Iterable[RankedFamily], universe: Universe) -> int:
    """Several families in one file, each introduced by a ``# family <i>`` line."""
    lines = [f"# n={universe.n} k={universe.k}"]
    count = 0
    for F in families:
        lines.append(f"# family {count}")
        lines.extend(_format_family(F))
        count += 1
    Path(path).write_text("\n".join(lines) + "\n")
    return count


def _parse_header(line: str) -> Universe:
    fields = dict(tok.split("=", 1) for tok in line.lstrip("#").split() if "=" in tok)
    try:
        return Universe(int(fields["n"]), int(fields["k"]))
    except KeyError as exc:
        raise ValueError(f"malformed header {line!r}") from exc


def read_families(path: str | Path) -> list[RankedFamily]:
    lines = [ln.strip() for ln in Path(path).read_text().splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines or not lines[0].startswith("#"):
        raise ValueError("family file must start with '# n=<n> k=<k>'")
    universe = _parse_header(lines[0])
    groups: list[list[str]] = [[]]
    for ln in lines[1:]:
        if ln.startswith("#"):
            if ln[1:].split()[:1] == ["family"] and groups[-1]:
                groups.append([])
            continue
        groups[-1].append(ln)
    out = []
    for g in groups:
        sets = [tuple(sorted(int(t) for t in ln.split())) for ln in g]
        for s in sets:
            if len(s) != universe.k or len(set(s)) != universe.k or max(s) > universe.n:
                raise ValueError(f"{s} is not a {universe.k}-subset of [{universe.n}]")
        out.append(RankedFamily.from_sets(universe, sets))
    return out


def read_family(path: str | Path) -> RankedFamily:
    families = read_families(path)
    if len(families) != 1:
        raise ValueError(f"expected one family, found {len(families)}")
    return families[0]


def family_summary(universe: Universe, sizes: Iterable[int]) -> dict[str, object]:
    sizes = list(sizes)
    hist: dict[int, int] = {}
    for s in sizes:
        hist[s] = hist.get(s, 0) + 1
    return {
        "count": len(sizes),
        "histogram": dict(sorted(hist.items())),
        "max_size": max(sizes, default=0),
        "star_size": binom(universe.n - 1, universe.k - 1),
    }


def sets_of(bits: int, universe: Universe) -> list[tuple[int, ...]]:
    return [elements_of(universe.masks[r]) for r in iter_bits(bits)]
