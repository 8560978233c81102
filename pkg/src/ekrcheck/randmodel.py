"""The random k-graph: each k-set present independently with probability p.

Samples are drawn from a counter-based generator (Philox) keyed by the
master seed; trial ``t`` starts at counter block ``t * ceil(m / 4)`` where
``m = C(n, k)``, so any trial can be regenerated on its own and batches
drawn in one call agree with per-trial draws.

With ``n = 2k + 1`` a (k+1)-set ``T`` avoiding ``x`` counts as present
exactly when the k-set ``[n] \\ T`` is present.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.stats import binomtest

from .combinat import KSet, RankedFamily, Universe, mask_of

__all__ = [
    "EXACT_LIMIT",
    "SampleX",
    "sample",
    "sample_batch",
    "count_in",
    "MCResult",
    "wilson",
    "mc_estimate",
    "mc_estimate_batch",
    "exact_prob",
    "DeviationEvent",
    "DeviationScan",
    "deviation_scan",
]

EXACT_LIMIT = 24


def _check_p(p: float) -> None:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")


def _blocks(m: int) -> int:
    return -(-m // 4)


def _generator(seed: int, trial: int, m: int) -> np.random.Generator:
    bg = np.random.Philox(key=seed)
    if trial:
        bg.advance(trial * _blocks(m))
    return np.random.Generator(bg)


@dataclass(frozen=True)
class SampleX:
    """One realization of the random k-graph."""

    lower: RankedFamily
    p: float
    seed: int
    trial: int = 0

    @property
    def universe(self) -> Universe:
        return self.lower.universe

    @property
    def eps(self) -> float:
        return 1.0 - self.p

    @property
    def bits(self) -> int:
        return self.lower.members

    def __len__(self) -> int:
        return len(self.lower)

    def contains(self, s: KSet | Iterable[int]) -> bool:
        """Membership for k-sets, and for (k+1)-sets through complementation."""
        mask = s.bits if isinstance(s, KSet) else mask_of(s)
        return bool(self.bits >> _lower_rank(self.universe, mask) & 1)


def _lower_rank(u: Universe, mask: int) -> int:
    size = mask.bit_count()
    if size == u.k:
        return u.rank_mask(mask)
    if size == u.k + 1:
        if u.n != 2 * u.k + 1:
            raise ValueError("the (k+1)-layer view needs n = 2k+1")
        full = (1 << u.n) - 1
        if mask & ~full:
            raise ValueError("set outside the ground set")
        return u.rank_mask(full & ~mask)
    raise ValueError(f"set of size {size} lives in neither layer")


def sample(u: Universe, p: float, seed: int, trial: int = 0) -> SampleX:
    _check_p(p)
    keep = _generator(seed, trial, u.size).random(u.size) < p
    bits = sum(1 << r for r in np.flatnonzero(keep).tolist())
    return SampleX(RankedFamily(u, bits), p, seed, trial)


def sample_batch(u: Universe, p: float, seed: int, start: int, count: int) -> np.ndarray:
    """Boolean matrix whose row ``i`` is trial ``start + i``."""
    _check_p(p)
    m = u.size
    width = 4 * _blocks(m)
    draws = _generator(seed, start, m).random((count, width))
    return draws[:, :m] < p


def count_in(X: SampleX, B: RankedFamily | Iterable[KSet | Iterable[int]]) -> int:
    """``|X & B|`` for a ranked family or an iterable of sets.

    Sets of size k+1 are read through complementation; all members of an
    iterable must have the same size.
    """
    u = X.universe
    if isinstance(B, RankedFamily):
        if B.universe != u:
            raise ValueError("family lives in a different universe")
        return (X.bits & B.members).bit_count()
    masks = [b.bits if isinstance(b, KSet) else (b if isinstance(b, int) else mask_of(b)) for b in B]
    sizes = {m.bit_count() for m in masks}
    if len(sizes) > 1:
        raise ValueError("family mixes the two layers")
    return sum(X.bits >> _lower_rank(u, m) & 1 for m in masks)


@dataclass(frozen=True)
class MCResult:
    estimate: float
    lo: float
    hi: float
    successes: int
    trials: int

    @property
    def half_width(self) -> float:
        return (self.hi - self.lo) / 2


def wilson(successes: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    ci = binomtest(successes, trials).proportion_ci(confidence_level=confidence, method="wilson")
    return float(ci.low), float(ci.high)


def _result(successes: int, trials: int) -> MCResult:
    lo, hi = wilson(successes, trials)
    return MCResult(successes / trials, lo, hi, successes, trials)


def _chunks(trials: int, size: int) -> list[tuple[int, int]]:
    return [(s, min(size, trials - s)) for s in range(0, trials, size)]


def mc_estimate_batch(
    event: Callable[[np.ndarray], np.ndarray],
    u: Universe,
    p: float,
    trials: int,
    seed: int,
    threads: int = 1,
    chunk: int = 4096,
) -> MCResult:
    """Estimate with a vectorized event mapping a sample matrix to a boolean vector."""
    if trials < 1:
        raise ValueError("trials must be >= 1")

    def run(job: tuple[int, int]) -> int:
        start, count = job
        return int(np.count_nonzero(event(sample_batch(u, p, seed, start, count))))

    jobs = _chunks(trials, chunk)
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            hits = list(pool.map(run, jobs))
    else:
        hits = [run(j) for j in jobs]
    return _result(sum(hits), trials)


def mc_estimate(
    event: Callable[[SampleX], bool],
    u: Universe,
    p: float,
    trials: int,
    seed: int,
    threads: int = 1,
) -> MCResult:
    """Estimate ``Pr(event)`` from ``trials`` samples, with a 95% Wilson interval."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    weights = 1 << np.arange(u.size, dtype=object)

    def run(job: tuple[int, int]) -> int:
        start, count = job
        rows = sample_batch(u, p, seed, start, count)
        hits = 0
        for i, row in enumerate(rows):
            bits = int(np.dot(row.astype(object), weights)) if u.size else 0
            hits += bool(event(SampleX(RankedFamily(u, bits), p, seed, start + i)))
        return hits

    jobs = _chunks(trials, 1024)
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            hits = list(pool.map(run, jobs))
    else:
        hits = [run(j) for j in jobs]
    return _result(sum(hits), trials)


def exact_prob(
    event: Callable[[RankedFamily], bool] | None,
    u: Universe,
    p: float,
    batch: Callable[[np.ndarray], np.ndarray] | None = None,
) -> float:
    """``sum_X p^|X| (1-p)^(m-|X|) [event(X)]`` over all ``2^m`` subfamilies."""
    _check_p(p)
    m = u.size
    if m > EXACT_LIMIT:
        raise ValueError(f"exact enumeration limited to C(n,k) <= {EXACT_LIMIT}, got {m}")
    codes = np.arange(1 << m, dtype=np.uint64)
    sizes = np.bitwise_count(codes).astype(np.int64)
    weights = p**sizes * (1.0 - p) ** (m - sizes)
    if batch is not None:
        rows = (codes[:, None] >> np.arange(m, dtype=np.uint64)) & np.uint64(1)
        hit = np.asarray(batch(rows.astype(bool)), dtype=bool)
    else:
        if event is None:
            raise ValueError("need an event or a batch event")
        hit = np.fromiter((bool(event(RankedFamily(u, int(c)))) for c in codes), dtype=bool, count=1 << m)
    return math.fsum(weights[hit].tolist())


@dataclass(frozen=True)
class DeviationEvent:
    B: RankedFamily
    eta: float
    delta_a: float
    count: int
    occurred: bool
    complement_occurred: bool


@dataclass(frozen=True)
class DeviationScan:
    events: list[DeviationEvent]

    @property
    def union(self) -> bool:
        return any(e.occurred for e in self.events)


def deviation_scan(
    X: SampleX, collection: Sequence[RankedFamily], eta: float = 0.08, delta_a: float = 1.0
) -> DeviationScan:
    """Evaluate ``||X & B| - |B|p| > eta * delta_a * p`` for each ``B``.

    The same event is also evaluated as ``||B \\ X| - |B| eps| > lam`` with
    ``eps = 1 - p``; thresholds use exact rational arithmetic so the two
    readings agree on every sample.
    """
    p = Fraction(X.p)
    eps = 1 - p
    lam = Fraction(eta) * Fraction(delta_a) * p
    events = []
    for B in collection:
        c = count_in(X, B)
        b = len(B)
        occurred = abs(c - b * p) > lam
        comp = abs((b - c) - b * eps) > lam
        events.append(DeviationEvent(B, eta, delta_a, c, occurred, comp))
    return DeviationScan(events)

