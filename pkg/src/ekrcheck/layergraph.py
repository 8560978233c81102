"""The containment bigraph on the two middle layers of ``2^[2k]``.

Vertex sets are plain ``int`` bitsets over colex ranks: a lower set is a
bitset over the ``N = C(2k, k)`` k-subsets of ``[2k]``, an upper set one over
the ``M = C(2k, k+1)`` (k+1)-subsets.  The module also carries two small
tools for arbitrary graphs (j-linkage and rooted-subtree counting), given as
adjacency mappings ``vertex -> iterable of neighbours``; a ``networkx.Graph``
works as such a mapping.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Hashable, Iterable, Iterator, Mapping, NamedTuple

import numpy as np
from scipy.optimize import brentq

from .combinat import binom, iter_bits, layer_index, layer_masks

__all__ = [
    "LayerGraph",
    "LinkedPartition",
    "KKCheck",
    "layer_graph",
    "kk_lower_bound",
    "lovasz_x",
    "sweep_kk",
    "is_j_linked",
    "check_link_propagation",
    "count_rooted_subtrees",
    "verify_tree_bound",
]

ENUMERATION_LIMIT = 70
SWEEP_LIMIT = 24


@dataclass(frozen=True)
class LinkedPartition:
    blocks: tuple[int, ...]
    j: int

    def __len__(self) -> int:
        return len(self.blocks)


class KKCheck(NamedTuple):
    size: int
    shadow: int
    delta: Fraction
    bound: float | None
    lovasz_x: float
    lovasz_bound: float
    passed: bool


def kk_lower_bound(size: int, k: int) -> float:
    """Lower bound ``(log 2 / k) log2(N / (2|A|))`` on delta(A), valid for ``|A| <= N/2``."""
    N = binom(2 * k, k)
    if not 1 <= size <= N // 2:
        raise ValueError(f"bound needs 1 <= |A| <= N/2 = {N // 2}, got {size}")
    return math.log(2) / k * math.log2(N / (2 * size))


def _gen_binom(x: float, k: int) -> float:
    out = 1.0
    for i in range(k):
        out *= (x - i) / (i + 1)
    return out


@lru_cache(maxsize=None)
def lovasz_x(size: int, k: int) -> float:
    """Real ``x >= k`` with ``C(x, k) = size``."""
    if size < 1:
        raise ValueError("size must be positive")
    # exact integer solutions avoid round-off at the equality cases
    m = k
    while binom(m, k) < size:
        m += 1
    if binom(m, k) == size:
        return float(m)
    return brentq(lambda x: _gen_binom(x, k) - size, m - 1, m, xtol=1e-12, rtol=1e-12)


class LayerGraph:
    """Containment bigraph on ``Gamma_k`` and ``Gamma_{k+1}`` over ``[2k]``."""

    def __init__(self, k: int) -> None:
        if k < 1:
            raise ValueError("k must be positive")
        self.k = k
        self.ground = 2 * k
        self.lower_masks = layer_masks(2 * k, k)
        self.upper_masks = layer_masks(2 * k, k + 1)
        self.N = len(self.lower_masks)
        self.M = len(self.upper_masks)
        uidx = layer_index(2 * k, k + 1)
        lidx = layer_index(2 * k, k)
        full = (1 << self.ground) - 1
        self.up: list[int] = []
        for m in self.lower_masks:
            nb = 0
            for e in iter_bits(full & ~m):
                nb |= 1 << uidx[m | 1 << e]
            self.up.append(nb)
        self.down: list[int] = [0] * self.M
        for r, nb in enumerate(self.up):
            for s in iter_bits(nb):
                self.down[s] |= 1 << r
        self.complement = [lidx[full & ~m] for m in self.lower_masks]
        self.lower_full = (1 << self.N) - 1
        self.upper_full = (1 << self.M) - 1
        self._balls: dict[int, list[int]] = {}

    def __repr__(self) -> str:
        return f"LayerGraph(k={self.k}, N={self.N}, M={self.M})"

    def _check_lower(self, A: int) -> None:
        if A < 0 or A >> self.N:
            raise ValueError("set does not live in the lower layer")

    def _check_upper(self, B: int) -> None:
        if B < 0 or B >> self.M:
            raise ValueError("set does not live in the upper layer")

    # shadows and expansion

    def upper_shadow(self, A: int) -> int:
        self._check_lower(A)
        up = self.up
        out = 0
        for r in iter_bits(A):
            out |= up[r]
        return out

    def lower_shadow(self, B: int) -> int:
        self._check_upper(B)
        down = self.down
        out = 0
        for s in iter_bits(B):
            out |= down[s]
        return out

    def delta(self, A: int) -> Fraction:
        a = A.bit_count()
        if a == 0:
            raise ValueError("delta is undefined for the empty set")
        return Fraction(self.upper_shadow(A).bit_count() - a, a)

    def boundary_edges(self, G: int, A: int) -> int:
        """Number of edges between upper set ``G`` and ``Gamma_k \\ A``."""
        outside = self.lower_full & ~A
        return sum((self.down[s] & outside).bit_count() for s in iter_bits(G))

    def verify_kk(self, A: int) -> KKCheck:
        """Check the isoperimetric bound and the real-x Kruskal-Katona form."""
        a = A.bit_count()
        if a == 0:
            raise ValueError("A must be nonempty")
        g = self.upper_shadow(A).bit_count()
        delta = Fraction(g - a, a)
        bound = kk_lower_bound(a, self.k) if 2 * a <= self.N else None
        x = lovasz_x(a, self.k)
        lov = _gen_binom(x, self.k - 1)
        ok = g >= lov * (1 - 1e-9)
        if bound is not None:
            ok = ok and float(delta) >= bound - 1e-12
        return KKCheck(a, g, delta, bound, x, lov, ok)

    # distances, balls, linkage

    def lower_distance(self, r: int, s: int) -> int:
        common = (self.lower_masks[r] & self.lower_masks[s]).bit_count()
        return 2 * (self.k - common)

    def neighborhood_iter(self, lower: int, upper: int, radius: int) -> tuple[int, int]:
        """All vertices within ``radius`` of the set ``lower + upper``."""
        if radius < 0:
            raise ValueError("radius must be non-negative")
        for _ in range(radius):
            new_upper = upper | self.upper_shadow(lower)
            new_lower = lower | self.lower_shadow(upper)
            if (new_lower, new_upper) == (lower, upper):
                break
            lower, upper = new_lower, new_upper
        return lower, upper

    def lower_ball(self, j: int) -> list[int]:
        """For each lower vertex, the lower vertices within distance ``j``."""
        if j not in self._balls:
            need = self.k - j // 2
            masks = self.lower_masks
            balls = []
            for m in masks:
                b = 0
                for s, other in enumerate(masks):
                    if (m & other).bit_count() >= need:
                        b |= 1 << s
                balls.append(b)
            self._balls[j] = balls
        return self._balls[j]

    def linked_components(self, A: int, j: int = 2) -> LinkedPartition:
        if j < 1:
            raise ValueError("linkage parameter must be >= 1")
        self._check_lower(A)
        ball = self.lower_ball(j)
        rest = A
        blocks = []
        while rest:
            seed = rest & -rest
            block = seed
            frontier = seed
            while frontier:
                grow = 0
                for r in iter_bits(frontier):
                    grow |= ball[r]
                grow &= rest & ~block
                block |= grow
                frontier = grow
            blocks.append(block)
            rest &= ~block
        return LinkedPartition(tuple(blocks), j)

    def is_linked(self, A: int, j: int = 2) -> bool:
        return len(self.linked_components(A, j)) <= 1

    def upper_linked(self, B: int, j: int) -> bool:
        """Whether an upper-layer set is j-linked (distance 2(k+1-|y & z|))."""
        self._check_upper(B)
        need = self.k + 1 - j // 2
        members = [self.upper_masks[s] for s in iter_bits(B)]
        if len(members) <= 1:
            return True
        reached = {0}
        queue = [0]
        while queue:
            i = queue.pop()
            for t, other in enumerate(members):
                if t not in reached and (members[i] & other).bit_count() >= need:
                    reached.add(t)
                    queue.append(t)
        return len(reached) == len(members)

    def johnson_neighbors(self, r: int) -> int:
        return self.lower_ball(2)[r] & ~(1 << r)

    # closure

    def closure(self, A: int) -> int:
        """``{x in Gamma_k : N(x) subset of N(A)}``."""
        NA = self.upper_shadow(A)
        up = self.up
        out = 0
        for r in iter_bits(self.lower_shadow(NA)):
            if up[r] & ~NA == 0:
                out |= 1 << r
        return out

    def is_closed(self, A: int) -> bool:
        return self.closure(A) == A

    def complement_set(self, A: int) -> int:
        """Image of ``A`` under ``x -> [2k] \\ x``."""
        comp = self.complement
        out = 0
        for r in iter_bits(A):
            out |= 1 << comp[r]
        return out

    def is_intersecting(self, A: int) -> bool:
        # two k-subsets of [2k] are disjoint iff they are complementary
        return A & self.complement_set(A) == 0

    def enumerate_closed(self, min_size: int = 1) -> Iterator[int]:
        """Every closed lower set with at least ``min_size`` members, in lectic order.

        Next-Closure over the colex ranks; bit ``N-1`` is the most significant.
        """
        if self.N > ENUMERATION_LIMIT:
            raise ValueError(
                f"closed-set enumeration limited to N <= {ENUMERATION_LIMIT}; use Monte Carlo mode"
            )
        A = self.closure(0)
        while True:
            if A.bit_count() >= min_size:
                yield A
            for i in range(self.N - 1, -1, -1):
                bit = 1 << i
                if A & bit:
                    continue
                low = A & (bit - 1)
                B = self.closure(low | bit)
                if B & (bit - 1) == low:
                    A = B
                    break
            else:
                return

    # vectorised tables over all subsets of the lower layer

    def subset_shadow_table(self) -> np.ndarray:
        """``table[S]`` is the upper shadow (as a bitmask) of lower subset ``S``."""
        if self.N > SWEEP_LIMIT:
            raise ValueError(f"subset tables limited to N <= {SWEEP_LIMIT}")
        table = np.zeros(1 << self.N, dtype=np.uint64)
        for i, nb in enumerate(self.up):
            half = 1 << i
            table[half : 2 * half] = table[:half] | np.uint64(nb)
        return table


@lru_cache(maxsize=None)
def layer_graph(k: int) -> LayerGraph:
    return LayerGraph(k)


def sweep_kk(k: int) -> dict[str, int]:
    """Check both shadow bounds on every nonempty subset of ``Gamma_k``.

    The isoperimetric bound is checked where ``|A| <= N/2`` and the
    real-x Kruskal-Katona bound everywhere.  Returns violation counts.
    """
    lg = layer_graph(k)
    shadows = np.bitwise_count(lg.subset_shadow_table()).astype(np.int64)
    sizes = np.bitwise_count(np.arange(1 << lg.N, dtype=np.uint64)).astype(np.int64)
    sizes[0] = 1  # placeholder, the empty set is excluded below
    nonempty = np.arange(1 << lg.N) > 0
    half = nonempty & (2 * sizes <= lg.N)
    delta = (shadows - sizes) / sizes
    per_size = np.zeros(lg.N + 1)
    lov = np.zeros(lg.N + 1)
    for a in range(1, lg.N + 1):
        if 2 * a <= lg.N:
            per_size[a] = kk_lower_bound(a, k)
        lov[a] = _gen_binom(lovasz_x(a, k), k - 1)
    kk_bad = half & (delta < per_size[sizes] - 1e-12)
    lov_bad = nonempty & (shadows < lov[sizes] * (1 - 1e-9))
    star = 0
    for r, m in enumerate(lg.lower_masks):
        if m & 1:
            star |= 1 << r
    return {
        "checked": int(nonempty.sum()),
        "checked_half": int(half.sum()),
        "kk_violations": int(kk_bad.sum()),
        "lovasz_violations": int(lov_bad.sum()),
        "star_shadow": int(shadows[star]),
        "star_size": star.bit_count(),
    }


# arbitrary graphs

Adjacency = Mapping[Hashable, Iterable[Hashable]]


def _bounded_bfs(adj: Adjacency, source: Hashable, depth: int) -> set:
    seen = {source}
    frontier = [source]
    for _ in range(depth):
        nxt = []
        for u in frontier:
            for v in adj[u]:
                if v not in seen:
                    seen.add(v)
                    nxt.append(v)
        frontier = nxt
    return seen


def is_j_linked(adj: Adjacency, W: Iterable[Hashable], j: int) -> bool:
    W = set(W)
    if len(W) <= 1:
        return True
    start = next(iter(W))
    reached = {start}
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for v in _bounded_bfs(adj, u, j) & W:
            if v not in reached:
                reached.add(v)
                queue.append(v)
    return reached == W


def check_link_propagation(adj: Adjacency, A: Iterable[Hashable], T: Iterable[Hashable], j: int) -> bool | None:
    """If ``T in N(A)``, ``A in N(T)`` and ``A`` is j-linked, report whether T is (j+2)-linked.

    Returns ``None`` when the hypotheses fail.
    """
    A, T = set(A), set(T)
    NA = {v for u in A for v in adj[u]}
    NT = {v for u in T for v in adj[u]}
    if not (T <= NA and A <= NT and is_j_linked(adj, A, j)):
        return None
    return is_j_linked(adj, T, j + 2)


def count_rooted_subtrees(adj: Adjacency, root: Hashable, u: int) -> int:
    """Number of subtrees of the graph with ``u`` vertices that contain ``root``.

    Subtrees are counted as edge sets.  Each candidate boundary edge is
    either taken or banned for the rest of the branch, so every subtree is
    produced exactly once.
    """
    if u < 1:
        return 0
    if u == 1:
        return 1

    def extend(tree: frozenset, candidates: list, size: int) -> int:
        if size == u:
            return 1
        total = 0
        while candidates:
            (_, b), rest = candidates[0], candidates[1:]
            grown = tree | {b}
            new = [c for c in rest if c[1] != b]
            new += [(b, w) for w in adj[b] if w not in grown]
            total += extend(grown, new, size + 1)
            candidates = rest
        return total

    return extend(frozenset([root]), [(root, w) for w in adj[root] if w != root], 1)


def verify_tree_bound(adj: Adjacency, u: int) -> bool:
    """Rooted-subtree counts are at most ``(e d)^(u-1)`` at every root."""
    d = max((len(list(adj[v])) for v in adj), default=0)
    bound = (math.e * d) ** (u - 1)
    return all(count_rooted_subtrees(adj, v, u) <= bound for v in adj)
