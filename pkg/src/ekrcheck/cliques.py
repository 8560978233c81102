"""Bitset clique search used by the brute-force oracles.

Graphs are lists of neighbour bitmasks: bit ``j`` of ``adj[i]`` is set when
``i`` and ``j`` are adjacent.  No self-loops.
"""

from __future__ import annotations

from typing import Iterator

from .combinat import iter_bits

__all__ = ["maximal_cliques", "maximum_cliques", "clique_number", "complement_graph"]


def complement_graph(adj: list[int]) -> list[int]:
    full = (1 << len(adj)) - 1
    return [full & ~a & ~(1 << i) for i, a in enumerate(adj)]


def maximal_cliques(adj: list[int], candidates: int | None = None) -> Iterator[int]:
    """Bron-Kerbosch with pivoting; yields each maximal clique once as a bitmask."""
    if candidates is None:
        candidates = (1 << len(adj)) - 1
    stack = [(0, candidates, 0)]
    while stack:
        R, P, X = stack.pop()
        if not P:
            if not X:
                yield R
            continue
        pivot_pool = P | X
        pivot = max(iter_bits(pivot_pool), key=lambda u: (adj[u] & P).bit_count())
        for v in iter_bits(P & ~adj[pivot]):
            bit = 1 << v
            stack.append((R | bit, P & adj[v], X & adj[v]))
            P &= ~bit
            X |= bit


def maximum_cliques(adj: list[int], candidates: int | None = None) -> tuple[int, list[int]]:
    """Size of a largest clique and every clique of that size (branch and bound)."""
    if candidates is None:
        candidates = (1 << len(adj)) - 1
    best = 0
    found: list[int] = []

    def grow(R: int, size: int, P: int) -> None:
        nonlocal best, found
        if not P:
            if size > best:
                best, found = size, [R]
            elif size == best:
                found.append(R)
            return
        while P:
            if size + P.bit_count() < best:
                return
            low = P & -P
            v = low.bit_length() - 1
            grow(R | low, size + 1, P & adj[v])
            P ^= low

    grow(0, 0, candidates)
    # an empty graph has the empty clique as its unique maximum
    return best, found


def clique_number(adj: list[int], candidates: int | None = None) -> int:
    return maximum_cliques(adj, candidates)[0]
