"""Ground-set arithmetic: k-set ranking, families as rank bitsets, tail bounds.

Elements of the ground set are the integers ``1..n``; element ``i`` occupies
bit ``i - 1`` of a membership mask.  k-sets are ranked in colexicographic
order, so ``{1, 2}`` has rank 0 and the rank of a set does not depend on
``n``.  A family of k-sets is a Python ``int`` whose bit ``r`` is set when
the k-set of rank ``r`` belongs to it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator, NamedTuple

__all__ = [
    "binom",
    "iter_bits",
    "mask_of",
    "elements_of",
    "colex_rank",
    "colex_unrank",
    "layer_masks",
    "layer_index",
    "Universe",
    "KSet",
    "RankedFamily",
    "rank",
    "unrank",
    "ChernoffBound",
    "UpperTailBound",
    "chernoff_bound",
    "uppertail_bound",
    "binsum_bound",
]


def binom(a: int, b: int) -> int:
    if b < 0 or a < 0 or b > a:
        return 0
    return math.comb(a, b)


def iter_bits(x: int) -> Iterator[int]:
    """Yield the positions of the set bits of ``x`` in increasing order."""
    while x:
        low = x & -x
        yield low.bit_length() - 1
        x ^= low


def mask_of(elements: Iterable[int]) -> int:
    m = 0
    for e in elements:
        if e < 1:
            raise ValueError(f"ground-set elements start at 1, got {e}")
        m |= 1 << (e - 1)
    return m


def elements_of(mask: int) -> tuple[int, ...]:
    return tuple(b + 1 for b in iter_bits(mask))


def colex_rank(mask: int) -> int:
    r = 0
    for j, pos in enumerate(iter_bits(mask), start=1):
        r += binom(pos, j)
    return r


def colex_unrank(index: int, k: int) -> int:
    mask = 0
    for j in range(k, 0, -1):
        # largest pos with C(pos, j) <= index
        pos = j - 1
        while binom(pos + 1, j) <= index:
            pos += 1
        mask |= 1 << pos
        index -= binom(pos, j)
    return mask


@lru_cache(maxsize=None)
def layer_masks(n: int, k: int) -> tuple[int, ...]:
    """All k-subsets of ``[n]`` as masks, indexed by colex rank."""
    return tuple(colex_unrank(i, k) for i in range(binom(n, k)))


@lru_cache(maxsize=None)
def layer_index(n: int, k: int) -> dict[int, int]:
    return {m: i for i, m in enumerate(layer_masks(n, k))}


@dataclass(frozen=True)
class Universe:
    """The k-subsets of ``[n]``, with ``n >= 2k``."""

    n: int
    k: int

    def __post_init__(self) -> None:
        if self.k < 1 or self.n < 1:
            raise ValueError("n and k must be positive integers")
        if self.n < 2 * self.k:
            raise ValueError(f"need n >= 2k, got n={self.n}, k={self.k}")

    @property
    def size(self) -> int:
        return binom(self.n, self.k)

    @property
    def M(self) -> int:
        return binom(2 * self.k, self.k - 1)

    @property
    def N(self) -> int:
        return binom(2 * self.k, self.k)

    @property
    def full(self) -> int:
        return (1 << self.size) - 1

    @property
    def masks(self) -> tuple[int, ...]:
        return layer_masks(self.n, self.k)

    def rank_mask(self, mask: int) -> int:
        if mask.bit_count() != self.k or mask >> self.n:
            raise ValueError(f"{elements_of(mask)} is not a {self.k}-subset of [{self.n}]")
        return colex_rank(mask)

    def unrank_mask(self, index: int) -> int:
        if not 0 <= index < self.size:
            raise IndexError(f"rank {index} outside [0, {self.size})")
        return layer_masks(self.n, self.k)[index]

    def family(self, sets: Iterable[Iterable[int]] = ()) -> RankedFamily:
        return RankedFamily.from_sets(self, sets)


@dataclass(frozen=True)
class KSet:
    bits: int

    @classmethod
    def of(cls, *elements: int) -> KSet:
        return cls(mask_of(elements))

    @property
    def elements(self) -> tuple[int, ...]:
        return elements_of(self.bits)

    @property
    def rank(self) -> int:
        return colex_rank(self.bits)

    def __len__(self) -> int:
        return self.bits.bit_count()

    def __repr__(self) -> str:
        return "KSet{" + ",".join(map(str, self.elements)) + "}"


def rank(universe: Universe, s: KSet | Iterable[int]) -> int:
    mask = s.bits if isinstance(s, KSet) else mask_of(s)
    return universe.rank_mask(mask)


def unrank(universe: Universe, index: int) -> KSet:
    return KSet(universe.unrank_mask(index))


@dataclass(frozen=True)
class RankedFamily:
    """A set of k-subsets of ``[n]`` stored as a bitset over colex ranks."""

    universe: Universe
    members: int = 0

    @classmethod
    def from_sets(cls, universe: Universe, sets: Iterable[Iterable[int] | KSet]) -> RankedFamily:
        bits = 0
        for s in sets:
            bits |= 1 << rank(universe, s)
        return cls(universe, bits)

    @classmethod
    def full(cls, universe: Universe) -> RankedFamily:
        return cls(universe, universe.full)

    def __len__(self) -> int:
        return self.members.bit_count()

    def __iter__(self) -> Iterator[int]:
        return iter_bits(self.members)

    def __contains__(self, item: object) -> bool:
        if isinstance(item, KSet):
            item = item.rank
        elif not isinstance(item, int):
            item = colex_rank(mask_of(item))  # type: ignore[arg-type]
        return bool(self.members >> item & 1)

    def __bool__(self) -> bool:
        return self.members != 0

    def _check(self, other: RankedFamily) -> None:
        if other.universe != self.universe:
            raise ValueError("families live in different universes")

    def __or__(self, other: RankedFamily) -> RankedFamily:
        self._check(other)
        return RankedFamily(self.universe, self.members | other.members)

    def __and__(self, other: RankedFamily) -> RankedFamily:
        self._check(other)
        return RankedFamily(self.universe, self.members & other.members)

    def __sub__(self, other: RankedFamily) -> RankedFamily:
        self._check(other)
        return RankedFamily(self.universe, self.members & ~other.members)

    def __xor__(self, other: RankedFamily) -> RankedFamily:
        self._check(other)
        return RankedFamily(self.universe, self.members ^ other.members)

    def masks(self) -> list[int]:
        table = self.universe.masks
        return [table[r] for r in self]

    def sets(self) -> list[tuple[int, ...]]:
        return [elements_of(m) for m in self.masks()]

    def degree(self, element: int) -> int:
        bit = 1 << (element - 1)
        return sum(1 for m in self.masks() if m & bit)

    def max_degree(self) -> int:
        return max((self.degree(e) for e in range(1, self.universe.n + 1)), default=0)

    def __repr__(self) -> str:
        u = self.universe
        return f"RankedFamily(n={u.n}, k={u.k}, {self.sets()})"


class ChernoffBound(NamedTuple):
    upper: float
    lower: float


class UpperTailBound(NamedTuple):
    bound: float
    meaningful: bool


def _check_binomial_params(m: int, q: float) -> None:
    if m < 1:
        raise ValueError(f"number of trials must be >= 1, got {m}")
    if not 0.0 < q < 1.0:
        raise ValueError(f"success probability must lie in (0, 1), got {q}")


def chernoff_bound(m: int, q: float, lam: float) -> ChernoffBound:
    """Bounds on Pr(B(m,q) > mq + lam) and Pr(B(m,q) < mq - lam).

    Returns ``exp(-lam^2 / (2(mu + lam/3)))`` and ``exp(-lam^2 / (2 mu))``
    with ``mu = mq``.  A zero numerator gives the vacuous bound 1.
    """
    _check_binomial_params(m, q)
    if lam < 0:
        raise ValueError("deviation must be non-negative")
    mu = m * q
    if lam == 0:
        return ChernoffBound(1.0, 1.0)
    upper = math.exp(-lam * lam / (2.0 * (mu + lam / 3.0)))
    lower = math.exp(-lam * lam / (2.0 * mu)) if mu > 0 else 1.0
    return ChernoffBound(upper, lower)


def uppertail_bound(m: int, q: float, K: float) -> UpperTailBound:
    """``exp(-K m q log(K/e))`` bounding Pr(B(m,q) > Kmq); informative only for K > e."""
    _check_binomial_params(m, q)
    if K <= 0:
        raise ValueError("K must be positive")
    mu = m * q
    value = math.exp(-K * mu * (math.log(K) - 1.0))
    return UpperTailBound(value, K > math.e)


def binsum_bound(a: int, b: int) -> float:
    """``exp(a log(eb/a))``, an upper bound on sum_{i<=a} C(b, i) when a <= b/2."""
    if a < 1 or b < 1:
        raise ValueError("a and b must be positive integers")
    if 2 * a > b:
        raise ValueError(f"bound requires a <= b/2, got a={a}, b={b}")
    return math.exp(a * math.log(math.e * b / a))
