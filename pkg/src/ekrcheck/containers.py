"""Approximations of a closed 2-linked lower set by a short record (T, F, U).

Given ``A`` with upper shadow ``G``, a sample ``T`` of ``A`` determines

* ``W = N^3(T)`` in the upper layer, a first guess at ``G``;
* ``S = {x : d_W(x) >= k/2}``, a first guess at ``A``;
* ``F = edges between N(T) and Gamma_k \\ A``;
* ``Z = N(N^2(T) & A)``, which needs only ``T`` and ``F`` and sits inside
  ``W & G``.

A sample ``U`` of ``W \\ G`` then trims ``S`` to ``S' = S \\ N(U)``.  The
quantities the asymptotic argument bounds by unspecified constants are
reported here as achieved ratios.

Path counts ``phi(v, A)`` count walks ``v x1 y x2`` with ``x1, x2`` in ``A``
(repeated vertices allowed).  With that reading ``G \\ G0 <= H | I`` holds
exactly at every k.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .combinat import binom, elements_of, iter_bits
from .layergraph import LayerGraph

__all__ = [
    "ContainerParams",
    "Filtration",
    "ContainerRecord",
    "Forest",
    "LargeDeltaSpec",
    "phi_counts",
    "g0",
    "filtration",
    "g0_lemma_chains",
    "w_of",
    "s_of",
    "f_of",
    "z_from_a",
    "z_from_f",
    "find_T",
    "find_U",
    "build_record",
    "check_record",
    "reconstruct",
    "forest_spec",
    "forest_count_bound",
    "specify_large_delta",
    "record_to_json",
]


@dataclass(frozen=True)
class ContainerParams:
    zeta: float = 0.2
    eta: float = 0.08
    q_T: float | None = None
    q_U: float | None = None
    pilot: int = 64
    retry_cap: int = 1024
    accept_factor: float = 3.0

    def __post_init__(self) -> None:
        if not 0 < self.zeta < 1:
            raise ValueError("zeta must lie in (0, 1)")
        if self.eta <= 0:
            raise ValueError("eta must be positive")
        for q in (self.q_T, self.q_U):
            if q is not None and not 0 < q <= 1:
                raise ValueError("sampling rates must lie in (0, 1]")

    @property
    def theta(self) -> float:
        return self.zeta / 2

    def rate_T(self, k: int) -> float:
        if self.q_T is not None:
            return self.q_T
        return min(1.0, 16 * k ** (-3 + self.zeta) * math.log(k))

    def rate_U(self, k: int) -> float:
        if self.q_U is not None:
            return self.q_U
        return min(1.0, 4 * math.log(k) / k)


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed))


def _subsample(rng: np.random.Generator, members: list[int], q: float) -> int:
    keep = rng.random(len(members)) < q
    return sum(1 << r for r, take in zip(members, keep) if take)


def _ratio(value: float, scale: float) -> float:
    if scale > 0:
        return value / scale
    return 0.0 if value == 0 else math.inf


# the G0 filtration


def phi_counts(lg: LayerGraph, A: int) -> dict[int, int]:
    """``phi(v, A)`` for every ``v`` in ``G = N(A)``."""
    G = lg.upper_shadow(A)
    dA = {y: (lg.down[y] & A).bit_count() for y in iter_bits(G)}
    through = {x: sum(dA[y] for y in iter_bits(lg.up[x])) for x in iter_bits(A)}
    return {v: sum(through[x] for x in iter_bits(lg.down[v] & A)) for v in iter_bits(G)}


def g0(lg: LayerGraph, A: int, zeta: float = 0.2) -> int:
    threshold = 0.25 * lg.k ** (3 - zeta)
    return sum(1 << v for v, c in phi_counts(lg, A).items() if c >= threshold)


@dataclass(frozen=True)
class Filtration:
    H: int
    B: int
    I: int
    C: int


def filtration(lg: LayerGraph, A: int, theta: float = 0.1) -> Filtration:
    k = lg.k
    kt = k ** (1 - theta)
    G = lg.upper_shadow(A)
    H = sum(1 << y for y in iter_bits(G) if (lg.down[y] & A).bit_count() < kt)
    B = sum(1 << x for x in iter_bits(A) if (lg.up[x] & H).bit_count() > k / 2)
    AB = A & ~B
    I = sum(1 << y for y in iter_bits(G & ~H) if (lg.down[y] & AB).bit_count() < kt / 2)
    HI = H | I
    C = sum(1 << x for x in iter_bits(AB) if (lg.up[x] & HI).bit_count() > k / 4)
    return Filtration(H, B, I, C)


def _edges(lg: LayerGraph, upper: int, lower: int) -> int:
    return sum((lg.down[y] & lower).bit_count() for y in iter_bits(upper))


def g0_lemma_chains(lg: LayerGraph, A: int, params: ContainerParams = ContainerParams()) -> dict[str, bool]:
    """The inequality chains behind ``G \\ G0 <= H | I``, checked on the actual sets.

    Strict inequalities are required only where the set they count is nonempty.
    """
    k, a = lg.k, A.bit_count()
    kt = k ** (1 - params.theta)
    G = lg.upper_shadow(A)
    g = G.bit_count()
    f = filtration(lg, A, params.theta)
    H, B, I, C = f.H, f.B, f.I, f.C
    outside = lg.lower_full & ~A
    nH, nB, nI, nC = (s.bit_count() for s in (H, B, I, C))
    HI = H | I

    def lt(x: float, y: float, strict: bool) -> bool:
        return x < y if strict else x <= y

    eH = _edges(lg, H, outside)
    eG = _edges(lg, G, outside)
    eBH = _edges(lg, H, B)
    eIB = _edges(lg, I, B)
    eCHI = _edges(lg, HI, C)
    walks_ok = True
    need = (kt / 2) * (k / 2) * kt
    dA = {y: (lg.down[y] & A).bit_count() for y in iter_bits(G)}
    AB = A & ~B
    for y in iter_bits(G & ~HI):
        walks = 0
        for w in iter_bits(lg.down[y] & AB):
            for z in iter_bits(lg.up[w] & G & ~H):
                walks += dA[z]
        walks_ok &= walks >= need
    G0 = g0(lg, A, params.zeta)
    return {
        "H_edges": (k + 1 - kt) * nH <= eH <= eG and eG == (k + 1) * g - k * a,
        "B_edges": lt(k / 2 * nB, eBH, nB > 0) and lt(eBH, kt * nH, nH > 0),
        "I_edges": lt(kt / 2 * nI, eIB, nI > 0) and lt(eIB, k * nB / 2, nB > 0),
        "C_edges": lt(k / 4 * nC, eCHI, nC > 0) and lt(eCHI, HI.bit_count() * kt, HI != 0),
        "walk_count": walks_ok,
        "G_minus_G0_in_H_or_I": G & ~G0 & ~HI == 0,
    }


# the record


def w_of(lg: LayerGraph, T: int) -> int:
    return lg.upper_shadow(lg.lower_shadow(lg.upper_shadow(T)))


def s_of(lg: LayerGraph, W: int) -> int:
    half = lg.k / 2
    return sum(1 << x for x in iter_bits(lg.lower_shadow(W)) if (lg.up[x] & W).bit_count() >= half)


def f_of(lg: LayerGraph, A: int, T: int) -> tuple[tuple[int, int], ...]:
    """Edges ``(y, z)`` with ``y`` in ``N(T)`` and ``z`` outside ``A``."""
    outside = lg.lower_full & ~A
    return tuple((y, z) for y in iter_bits(lg.upper_shadow(T)) for z in iter_bits(lg.down[y] & outside))


def z_from_a(lg: LayerGraph, A: int, T: int) -> int:
    return lg.upper_shadow(lg.lower_shadow(lg.upper_shadow(T)) & A)


def z_from_f(lg: LayerGraph, T: int, F: tuple[tuple[int, int], ...]) -> int:
    """``N(T)`` plus the ends of paths ``x y z w`` from ``T`` avoiding ``F`` edges."""
    banned: dict[int, int] = {}
    for y, z in F:
        banned[y] = banned.get(y, 0) | 1 << z
    NT = lg.upper_shadow(T)
    inner = 0
    for y in iter_bits(NT):
        inner |= lg.down[y] & ~banned.get(y, 0)
    return NT | lg.upper_shadow(inner)


@dataclass
class ContainerRecord:
    A: int
    G: int
    T: int
    F: tuple[tuple[int, int], ...]
    U: int
    W: int
    S: int
    Z: int
    Sprime: int
    G0: int
    seed: int
    small_delta: bool
    achieved: dict[str, float] = field(default_factory=dict)
    t_fallback: bool = False
    u_fallback: bool = False

    @property
    def key(self) -> tuple[int, tuple[tuple[int, int], ...], int]:
        return (self.T, self.F, self.U)


def _t_measure(lg: LayerGraph, A: int, T: int, G0: int) -> tuple[int, int, int]:
    F = f_of(lg, A, T)
    return T.bit_count(), len(F), (G0 & ~z_from_a(lg, A, T)).bit_count()


def _accept_search(draw, measure, pilot: int, cap: int, factor: float):
    """Pilot round for the means, then the first draw within ``factor`` x mean.

    Falls back to the draw with the smallest worst ratio after ``cap`` tries.
    """
    stats = np.array([measure(draw()) for _ in range(pilot)], dtype=float)
    limits = factor * stats.mean(axis=0)
    best, best_score = None, math.inf
    for _ in range(cap):
        X = draw()
        m = np.asarray(measure(X), dtype=float)
        if np.all(m <= limits):
            return X, False
        with np.errstate(divide="ignore", invalid="ignore"):
            score = float(np.max(np.where(limits > 0, m / limits, np.where(m > 0, np.inf, 0.0))))
        if score < best_score:
            best, best_score = X, score
    return best, True


def find_T(lg: LayerGraph, A: int, params: ContainerParams = ContainerParams(), seed: int = 0) -> ContainerRecord:
    """Sample ``T`` from ``A`` until |T|, |F| and |G0 \\ Z| are within the pilot limits."""
    if A == 0:
        raise ValueError("A must be nonempty")
    k, a = lg.k, A.bit_count()
    G = lg.upper_shadow(A)
    G0 = g0(lg, A, params.zeta)
    members = list(iter_bits(A))
    rng = _rng(seed)
    q = params.rate_T(k)
    T, fallback = _accept_search(
        lambda: _subsample(rng, members, q),
        lambda T: _t_measure(lg, A, T, G0),
        params.pilot,
        params.retry_cap,
        params.accept_factor,
    )
    F = f_of(lg, A, T)
    W = w_of(lg, T)
    S = s_of(lg, W)
    Z = z_from_f(lg, T, F)
    delta = (G.bit_count() - a) / a
    z, th, logk = params.zeta, params.theta, math.log(k)
    achieved = {
        "T1": _ratio(T.bit_count(), a * k ** (-3 + z) * logk),
        "T2": _ratio(len(F), delta * a * k ** (-1 + z) * logk),
        "T3": _ratio((G0 & ~Z).bit_count(), a * k**-2),
        "T4": _ratio((W & ~G).bit_count(), delta * a * k**z * logk),
        "T5": _ratio((A & ~S).bit_count(), delta * a * k**-th),
    }
    return ContainerRecord(
        A=A, G=G, T=T, F=F, U=0, W=W, S=S, Z=Z, Sprime=S, G0=G0, seed=seed,
        small_delta=delta <= 1, achieved=achieved, t_fallback=fallback,
    )


def _l_set(lg: LayerGraph, record: ContainerRecord) -> int:
    WG = record.W & ~record.G
    quarter = lg.k / 4
    return sum(1 << x for x in iter_bits(record.S & ~record.A) if (lg.up[x] & WG).bit_count() >= quarter)


def find_U(lg: LayerGraph, A: int, record: ContainerRecord, params: ContainerParams = ContainerParams(), seed: int = 1) -> ContainerRecord:
    """Sample ``U`` from ``W \\ G`` until ``|L \\ N(U)|`` is at most its pilot mean."""
    k, a = lg.k, A.bit_count()
    G, W, S = record.G, record.W, record.S
    L = _l_set(lg, record)
    members = list(iter_bits(W & ~G))
    rng = _rng(seed)
    q = params.rate_U(k)
    U, fallback = _accept_search(
        lambda: _subsample(rng, members, q),
        lambda U: ((L & ~lg.lower_shadow(U)).bit_count(),),
        params.pilot,
        params.retry_cap,
        1.0,
    )
    NU = lg.lower_shadow(U)
    Sprime = S & ~NU
    delta = (G.bit_count() - a) / a
    logk = math.log(k)
    achieved = dict(record.achieved)
    achieved["U1"] = _ratio(U.bit_count(), delta * a * k ** (-1 + params.zeta) * logk**2)
    achieved["U2"] = _ratio((S & ~A & ~NU).bit_count(), delta * a)
    record.U = U
    record.Sprime = Sprime
    record.achieved = achieved
    record.u_fallback = fallback
    return record


def build_record(lg: LayerGraph, A: int, params: ContainerParams = ContainerParams(), seed: int = 0) -> ContainerRecord:
    seeds = np.random.SeedSequence(seed).generate_state(2, dtype=np.uint64)
    record = find_T(lg, A, params, int(seeds[0]))
    record = find_U(lg, A, record, params, int(seeds[1]))
    record.seed = seed
    return record


def reconstruct(lg: LayerGraph, Astar: int, Gstar: int, AminusAstar: int, GcapGstar: int) -> tuple[int, bool]:
    """Rebuild ``A`` from ``A*``, ``G*``, ``A \\ A*`` and ``G & G*``.

    Uses ``A & A* = {x in A* : N(x) <= G & G*}``.  The flag reports whether
    the result is closed and consistent with the inputs.
    """
    common = sum(1 << x for x in iter_bits(Astar) if lg.up[x] & ~GcapGstar == 0)
    A = common | AminusAstar
    ok = (
        A & ~Astar == AminusAstar
        and lg.upper_shadow(A) & Gstar == GcapGstar
        and lg.is_closed(A)
    )
    return A, ok


def check_record(lg: LayerGraph, record: ContainerRecord, params: ContainerParams = ContainerParams()) -> dict[str, bool]:
    A, G, T, W, S, Z, U, Sp = (
        record.A, record.G, record.T, record.W, record.S, record.Z, record.U, record.Sprime,
    )
    k = lg.k
    f = filtration(lg, A, params.theta)
    L = _l_set(lg, record)
    rest = S & ~A & ~L
    Astar = lg.closure(Sp)
    Gstar = lg.upper_shadow(Astar)
    return {
        "T_in_A": T & ~A == 0,
        "Z_in_W_and_G": Z & ~(W & G) == 0,
        "W_minus_G_bound": (W & ~G).bit_count() <= k * len(record.F),
        "Z_from_T_and_F": z_from_f(lg, T, record.F) == z_from_a(lg, A, T),
        "U_in_W_minus_G": U & ~(W & ~G) == 0,
        "Sprime_chain": Sp & ~S == 0 and (S & A) & ~Sp == 0,
        "G_minus_G0_in_H_or_I": G & ~record.G0 & ~(f.H | f.I) == 0,
        "S_minus_A_minus_L_degrees": all((lg.up[x] & G).bit_count() > k / 4 for x in iter_bits(rest)),
        "reconstruct_self": reconstruct(lg, A, G, 0, G) == (A, True),
        "reconstruct_from_Sprime": reconstruct(lg, Astar, Gstar, A & ~Astar, G & Gstar) == (A, True),
    }


# forests and the large-delta specification


@dataclass(frozen=True)
class Forest:
    """Rooted forest in the Johnson graph; ``parent`` maps each non-root to its parent."""

    roots: tuple[int, ...]
    parent: dict[int, int]
    single_root: bool

    @property
    def nonroots(self) -> int:
        return sum(1 << v for v in self.parent)

    @property
    def size(self) -> int:
        return len(self.roots) + len(self.parent)


def forest_spec(lg: LayerGraph, A: int, S: int) -> Forest:
    """BFS forest on ``A`` with roots in ``S & A`` and non-roots ``A \\ S``.

    Roots without children are dropped.  If ``S & A`` is empty a single root
    (the lowest-ranked member of ``A``) is used instead.
    """
    roots = S & A
    single = roots == 0
    if single:
        roots = A & -A
    parent: dict[int, int] = {}
    seen = roots
    queue = deque(iter_bits(roots))
    while queue:
        v = queue.popleft()
        for w in iter_bits(lg.johnson_neighbors(v) & A & ~seen):
            seen |= 1 << w
            parent[w] = v
            queue.append(w)
    used = set(parent.values()) & set(iter_bits(roots))
    if single:
        used = set(iter_bits(roots))
    return Forest(tuple(sorted(used)), parent, single)


def forest_valid(lg: LayerGraph, A: int, S: int, forest: Forest) -> bool:
    target = A & ~S
    if forest.single_root:
        target = A & ~(1 << forest.roots[0]) if forest.roots else A
    if forest.nonroots != target:
        return False
    for child, par in forest.parent.items():
        if lg.lower_distance(child, par) != 2:
            return False
    if not forest.single_root:
        roots = set(forest.roots)
        return all(r in roots or r in forest.parent for r in forest.parent.values()) and all(
            S >> r & 1 for r in roots
        )
    return True


def forest_count_bound(s: int, t: int, d: int) -> float:
    """``sum_{q<=t} C(s,q) C(t,q) (e d)^t``: forests with at most t vertices and roots among s."""
    return sum(binom(s, q) * binom(t, q) for q in range(t + 1)) * (math.e * d) ** t


@dataclass
class LargeDeltaSpec:
    A: int
    T: int
    Tprime: int
    S: int
    Z: int
    forest: Forest
    conditions: dict[str, bool]
    checks: dict[str, bool]
    achieved: dict[str, float]
    fallback: bool
    seed: int


def specify_large_delta(lg: LayerGraph, A: int, C_const: float = 2.0, seed: int = 0, retry_cap: int = 1024) -> LargeDeltaSpec:
    """Specify ``A`` (with delta > 1) through ``T``, ``T'`` and a rooted forest."""
    if A == 0:
        raise ValueError("A must be nonempty")
    k, a = lg.k, A.bit_count()
    G = lg.upper_shadow(A)
    g = G.bit_count()
    if g - a <= a:
        raise ValueError("specify_large_delta needs delta(A) > 1")
    logk = math.log(k)
    t_size = min(g, math.ceil(C_const * g / k * logk))
    Z = sum(1 << x for x in iter_bits(lg.lower_shadow(G)) if (lg.up[x] & G).bit_count() >= k / 4)
    members = list(iter_bits(G))
    rng = _rng(seed)

    def attempt() -> tuple[int, int, tuple[int, int]]:
        picks = rng.choice(len(members), size=t_size, replace=False)
        T = sum(1 << members[i] for i in picks)
        S = sum(
            1 << x for x in iter_bits(lg.lower_shadow(T)) if (lg.up[x] & T).bit_count() > C_const / 2 * logk
        )
        return T, S, ((A & ~S).bit_count(), (S & ~Z).bit_count())

    best = None
    fallback = True
    for _ in range(retry_cap):
        T, S, (miss, extra) = attempt()
        ok = miss < a / k**2 and extra < g / k
        score = (miss >= a / k**2) + (extra >= g / k), miss + extra
        if best is None or score < best[0]:
            best = (score, T, S)
        if ok:
            fallback = False
            break
    _, T, S = best
    Tprime = 0
    for x in iter_bits(A & ~S):
        Tprime |= lg.up[x] & -lg.up[x]
    forest = forest_spec(lg, A, S)
    conditions = {
        "A_minus_S": (A & ~S).bit_count() < a / k**2,
        "S_minus_Z": (S & ~Z).bit_count() < g / k,
    }
    checks = {
        "T_in_G": T & ~G == 0,
        "Tprime_in_G": Tprime & ~G == 0,
        "T_union_Tprime_4_linked": lg.upper_linked(T | Tprime, 4),
        "A_in_S_or_N_Tprime": A & ~(S | lg.lower_shadow(Tprime)) == 0,
        "S_size": S.bit_count() <= 4 * g * (k + 1) / k + g / k or not conditions["S_minus_Z"],
        "forest_valid": forest_valid(lg, A, S, forest),
    }
    achieved = {
        "forest_vertices": float(forest.size),
        "forest_ratio": _ratio(forest.size, a / k**2),
        "Tprime_ratio": _ratio(Tprime.bit_count(), a / k**2),
    }
    return LargeDeltaSpec(A, T, Tprime, S, Z, forest, conditions, checks, achieved, fallback, seed)


def record_to_json(lg: LayerGraph, record: ContainerRecord) -> str:
    lower = lambda bits: [list(elements_of(lg.lower_masks[r])) for r in iter_bits(bits)]  # noqa: E731
    upper = lambda bits: [list(elements_of(lg.upper_masks[s])) for s in iter_bits(bits)]  # noqa: E731
    payload: dict[str, Any] = {
        "k": lg.k,
        "seed": record.seed,
        "T": lower(record.T),
        "F": [[list(elements_of(lg.upper_masks[y])), list(elements_of(lg.lower_masks[z]))] for y, z in record.F],
        "U": upper(record.U),
        "sizes": {
            "A": record.A.bit_count(),
            "G": record.G.bit_count(),
            "T": record.T.bit_count(),
            "F": len(record.F),
            "U": record.U.bit_count(),
            "W": record.W.bit_count(),
            "S": record.S.bit_count(),
            "Z": record.Z.bit_count(),
            "Sprime": record.Sprime.bit_count(),
        },
        "achieved": {k: (v if math.isfinite(v) else None) for k, v in record.achieved.items()},
        "t_fallback": record.t_fallback,
        "u_fallback": record.u_fallback,
        "small_delta": record.small_delta,
    }
    return json.dumps(payload, sort_keys=True)
