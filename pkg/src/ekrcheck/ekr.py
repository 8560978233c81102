"""EKR verdicts for samples of the random k-graph on ``[2k+1]``.

Every maximum clique of a sample ``X`` has the form ``X & F`` for a maximal
intersecting family ``F``, which is either a star or a member of M.  With
``s* = max_x |X & K_x|`` and ``m* = max_{H in M} |X & H|``:

* weak EKR holds when ``s* >= m*``;
* strong EKR holds when ``m* < s*``, or when ``m* = s*`` and every ``H``
  attaining ``m*`` meets ``X`` in a family with a common element.

The event Q asks for ``H`` in M and ``x`` with ``H \\ K_x`` 2-linked,
expansion above ``1/(3k)`` and ``|X & H| >= |X & K_x|``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .cliques import maximum_cliques
from .combinat import RankedFamily, Universe, iter_bits
from .families import (
    _stars,
    disjointness_graph,
    enumerate_admissible,
    enumerate_M,
    enumerate_M_bruteforce,
    frankl_family,
    is_admissible,
    is_maximal_intersecting,
    is_principal,
    x_view,
)
from .layergraph import kk_lower_bound
from .randmodel import SampleX

__all__ = [
    "VERDICT_LIMIT_K",
    "ORACLE_LIMIT",
    "EkrContext",
    "ekr_context",
    "EkrVerdict",
    "ekr_verdict",
    "verdict_oracle",
    "verdict_batch",
    "q_threshold",
    "event_Q",
    "event_Q_batch",
    "event_Q_ag",
    "event_Q_at",
    "FailureWitness",
    "reduce_failure",
]

VERDICT_LIMIT_K = 3
ORACLE_LIMIT = 12


def q_threshold(k: int) -> Fraction:
    return Fraction(1, 3 * k)


def _indicator(bits: int, m: int) -> np.ndarray:
    return np.array([bits >> r & 1 for r in range(m)], dtype=bool)


class EkrContext:
    """Indicator matrices of the stars and of M for one universe."""

    def __init__(self, universe: Universe, families: list[int] | None = None) -> None:
        if universe.n != 2 * universe.k + 1:
            raise ValueError("EKR verdicts need n = 2k+1")
        self.universe = universe
        self.exact = families is None
        if families is None:
            if universe.k > VERDICT_LIMIT_K:
                raise ValueError(
                    f"enumerating M is limited to k <= {VERDICT_LIMIT_K}; pass a sampled list of families"
                )
            families = [F.members.members for F in enumerate_M(universe)]
        m = universe.size
        self.families = list(families)
        self.stars = list(_stars(universe))
        self.H = np.array([_indicator(b, m) for b in self.families], dtype=np.float64).reshape(-1, m)
        self.S = np.array([_indicator(b, m) for b in self.stars], dtype=np.float64)
        self._q_pairs: dict[Fraction, tuple[np.ndarray, np.ndarray]] = {}

    def q_pairs(self, threshold: Fraction | None = None) -> tuple[np.ndarray, np.ndarray]:
        """Indices ``(h, x-1)`` of the pairs meeting the linkage and expansion conditions."""
        u = self.universe
        threshold = q_threshold(u.k) if threshold is None else Fraction(threshold)
        if threshold not in self._q_pairs:
            hs, xs = [], []
            for x in range(1, u.n + 1):
                view = x_view(u, x)
                lg = view.graph
                for h, bits in enumerate(self.families):
                    A = view.drop_lower(bits)
                    if not A or not lg.is_linked(A):
                        continue
                    if lg.delta(A) > threshold:
                        hs.append(h)
                        xs.append(x - 1)
            self._q_pairs[threshold] = (np.array(hs, dtype=np.int64), np.array(xs, dtype=np.int64))
        return self._q_pairs[threshold]


@lru_cache(maxsize=None)
def ekr_context(universe: Universe) -> EkrContext:
    return EkrContext(universe)


@dataclass(frozen=True)
class EkrVerdict:
    star_max: int
    m_max: int
    strong: bool
    weak: bool
    star_witnesses: tuple[int, ...]
    m_witnesses: tuple[int, ...]
    exact: bool = True


def _common_element(family_bits: int, masks: tuple[int, ...]) -> bool:
    common = -1
    for r in iter_bits(family_bits):
        common &= masks[r]
    return common != 0


def ekr_verdict(X: SampleX, context: EkrContext | None = None) -> EkrVerdict:
    """Exact verdict through the star and M scans; ``m_witnesses`` are family bitsets."""
    u = X.universe
    ctx = ekr_context(u) if context is None else context
    xb = X.bits
    star_counts = [(xb & s).bit_count() for s in ctx.stars]
    fam_counts = [(xb & f).bit_count() for f in ctx.families]
    s_max = max(star_counts)
    m_max = max(fam_counts, default=0)
    attaining = tuple(f for f, c in zip(ctx.families, fam_counts) if c == m_max)
    if m_max < s_max:
        strong = True
    elif m_max > s_max:
        strong = False
    else:
        strong = all(_common_element(xb & f, u.masks) for f in attaining)
    return EkrVerdict(
        s_max,
        m_max,
        strong,
        s_max >= m_max,
        tuple(x + 1 for x, c in enumerate(star_counts) if c == s_max),
        attaining,
        ctx.exact,
    )


def verdict_oracle(X: SampleX) -> EkrVerdict:
    """Independent verdict: clique search on ``X`` and brute-force M."""
    u = X.universe
    if u.size > ORACLE_LIMIT:
        raise ValueError(f"oracle limited to C(n,k) <= {ORACLE_LIMIT}")
    full = u.full
    adj = [full & ~d & ~(1 << r) for r, d in enumerate(disjointness_graph(u))]
    omega, cliques = maximum_cliques(adj, X.bits)
    star_counts = [(X.bits & s).bit_count() for s in _stars(u)]
    s_max = max(star_counts)
    fams = [F.members for F in enumerate_M_bruteforce(u)]
    fam_counts = [(X.bits & f).bit_count() for f in fams]
    m_max = max(fam_counts, default=0)
    strong = all(c == 0 or _common_element(c, u.masks) for c in cliques)
    return EkrVerdict(
        s_max,
        m_max,
        strong,
        omega == s_max,
        tuple(x + 1 for x, c in enumerate(star_counts) if c == s_max),
        tuple(f for f, c in zip(fams, fam_counts) if c == m_max),
    )


def verdict_batch(rows: np.ndarray, context: EkrContext) -> tuple[np.ndarray, np.ndarray]:
    """Strong and weak flags for each row of a boolean sample matrix."""
    Xf = rows.astype(np.float64)
    hc = (Xf @ context.H.T).astype(np.int64)
    sc = (Xf @ context.S.T).astype(np.int64)
    s_max = sc.max(axis=1)
    m_max = hc.max(axis=1) if hc.shape[1] else np.zeros(len(rows), dtype=np.int64)
    weak = s_max >= m_max
    strong = m_max < s_max
    for t in np.flatnonzero(m_max == s_max):
        att = np.flatnonzero(hc[t] == m_max[t])
        inter = context.H[att] * Xf[t]
        # X & H sits inside a star exactly when some star catches all of it
        strong[t] = bool(np.all((inter @ context.S.T).max(axis=1) == m_max[t]))
    return strong, weak


# the event Q


def event_Q(X: SampleX, threshold: Fraction | None = None, context: EkrContext | None = None) -> bool:
    ctx = ekr_context(X.universe) if context is None else context
    hs, xs = ctx.q_pairs(threshold)
    xb = X.bits
    fam = np.array([(xb & f).bit_count() for f in ctx.families], dtype=np.int64)
    st = np.array([(xb & s).bit_count() for s in ctx.stars], dtype=np.int64)
    return bool(np.any(fam[hs] >= st[xs])) if len(hs) else False


def event_Q_batch(rows: np.ndarray, context: EkrContext, threshold: Fraction | None = None) -> np.ndarray:
    hs, xs = context.q_pairs(threshold)
    if not len(hs):
        return np.zeros(len(rows), dtype=bool)
    Xf = rows.astype(np.float64)
    hc = Xf @ context.H.T
    sc = Xf @ context.S.T
    return np.any(hc[:, hs] >= sc[:, xs], axis=1)


@dataclass(frozen=True)
class _AgEntry:
    A: int
    a: int
    g: int
    lifted_A: int
    lifted_G: int


@lru_cache(maxsize=None)
def _ag_table(universe: Universe, x: int, domain: str) -> tuple[_AgEntry, ...]:
    view = x_view(universe, x)
    lg = view.graph
    if domain == "admissible":
        source = enumerate_admissible(lg)
    elif domain == "closed":
        source = lg.enumerate_closed(min_size=1)
    else:
        raise ValueError(f"unknown domain {domain!r}")
    out = []
    for A in source:
        if not lg.is_linked(A):
            continue
        G = lg.upper_shadow(A)
        out.append(_AgEntry(A, A.bit_count(), G.bit_count(), view.lift_lower(A), view.lift_upper(G)))
    return tuple(out)


def event_Q_ag(X: SampleX, a: int, g: int, x: int | None = None, domain: str = "admissible") -> bool:
    """Some 2-linked ``A`` with ``|A| = a``, ``|G_A| = g`` and ``|X & G_A| <= |X & A|``.

    ``domain="closed"`` scans closed sets; ``"admissible"`` scans the encodings
    of M, for which the union over ``(a, g)`` is exactly Q at ``x``.
    """
    u = X.universe
    x = u.n if x is None else x
    xb = X.bits
    return any(
        (xb & e.lifted_G).bit_count() <= (xb & e.lifted_A).bit_count()
        for e in _ag_table(u, x, domain)
        if e.a == a and e.g == g
    )


def event_Q_at(X: SampleX, x: int, domain: str = "admissible", threshold: Fraction | None = None) -> bool:
    """Union of ``Q(a, g)`` over sizes with ``(g - a)/a`` above the threshold."""
    u = X.universe
    threshold = q_threshold(u.k) if threshold is None else Fraction(threshold)
    xb = X.bits
    return any(
        (xb & e.lifted_G).bit_count() <= (xb & e.lifted_A).bit_count()
        for e in _ag_table(u, x, domain)
        if Fraction(e.g - e.a, e.a) > threshold
    )


# the reduction from a failure of the strict inequality to Q


@dataclass
class FailureWitness:
    H: int
    x: int
    A: int
    J: int
    xa: int
    xj: int
    linked: bool
    components: tuple[int, ...]
    branch: str
    chosen_H: int | None
    chosen_A: int | None
    delta: Fraction | None
    q_holds: bool
    checks: dict[str, bool] = field(default_factory=dict)
    transcript: list[str] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return self.q_holds and all(self.checks.values())


def _delta_certificate(u: Universe, H: int, A: int, lg) -> tuple[str, Fraction, bool, list[str]]:
    """Branch on ``|H|`` against ``|H*|`` and certify the expansion of ``A``."""
    k = u.k
    M = math.comb(2 * k, k - 1)
    hstar = frankl_family(u, 3)
    size_h, size_star = H.bit_count(), len(hstar)
    delta = lg.delta(A)
    thr = q_threshold(k)
    lines = []
    if size_h > size_star:
        fam = RankedFamily(u, H)
        dh, dstar = fam.max_degree(), hstar.max_degree()
        a = A.bit_count()
        bound = kk_lower_bound(a, k) if 2 * a <= lg.N else None
        lines.append(f"|H|={size_h} > |H*|={size_star}: max degree {dh} vs {dstar}")
        cert = bound is not None and bound > float(thr)
        lines.append(f"isoperimetric bound {bound} {'certifies' if cert else 'does not certify'} delta > {thr}")
        return "large", delta, dh > dstar, lines
    exact = Fraction(M - size_h, A.bit_count())
    lines.append(f"|H|={size_h} <= |H*|={size_star}: delta = (M - |H|)/|A| = {exact}")
    return "small", delta, exact == delta, lines


def reduce_failure(X: SampleX, context: EkrContext | None = None) -> FailureWitness:
    """Replay the reduction from ``m* >= s*`` to the event Q on one sample."""
    u = X.universe
    k, n = u.k, u.n
    ctx = ekr_context(u) if context is None else context
    verdict = ekr_verdict(X, ctx)
    if verdict.m_max < verdict.star_max:
        raise ValueError("the strict star inequality holds; there is no failure to reduce")
    xb = X.bits
    H = min(verdict.m_witnesses)
    fam = RankedFamily(u, H)
    degrees = [fam.degree(e) for e in range(1, n + 1)]
    x = degrees.index(max(degrees)) + 1
    view = x_view(u, x)
    lg = view.graph
    A = view.drop_lower(H)
    J = view.star & ~H
    Kx = view.star
    xa, xj = (xb & view.lift_lower(A)).bit_count(), (xb & J).bit_count()
    thr = q_threshold(k)
    checks = {
        "AJHF": xa - xj == (xb & H).bit_count() - (xb & Kx).bit_count(),
        "XAXJ": xa >= xj,
        "AM": A.bit_count() * n <= (k + 1) * H.bit_count(),
        "G_is_J_complement": view.lift_upper(lg.upper_shadow(A)) == J,
    }
    transcript = [f"H has {H.bit_count()} members, x={x} of degree {max(degrees)}, |A|={A.bit_count()}"]
    comps = lg.linked_components(A).blocks

    def q_for(Hi: int, Ai: int) -> bool:
        fam_i = RankedFamily(u, Hi)
        return (
            is_maximal_intersecting(fam_i)
            and not is_principal(fam_i)
            and lg.is_linked(Ai)
            and lg.delta(Ai) > thr
            and (xb & Hi).bit_count() >= (xb & Kx).bit_count()
        )

    if len(comps) == 1:
        branch, delta, cert, lines = _delta_certificate(u, H, A, lg)
        checks["branch_certificate"] = cert
        transcript += lines
        q = q_for(H, A)
        transcript.append(f"A is 2-linked, delta={delta}, Q {'holds' if q else 'fails'}")
        return FailureWitness(H, x, A, J, xa, xj, True, comps, "linked-" + branch, H, A, delta, q, checks, transcript)

    order = sorted(range(len(comps)), key=lambda i: (-comps[i].bit_count(), comps[i]))
    comps = tuple(comps[i] for i in order)
    built = []
    for Ai in comps:
        Ji = view.lift_upper(lg.upper_shadow(Ai))
        Hi = (Kx & ~Ji) | view.lift_lower(Ai)
        built.append((Ai, Ji, Hi))
    union_J = 0
    disjoint = True
    for _, Ji, _ in built:
        disjoint &= union_J & Ji == 0
        union_J |= Ji
    checks["J_partition"] = disjoint and union_J == J
    admissible = [is_admissible(lg, Ai) for Ai, _, _ in built]
    in_M = [
        is_maximal_intersecting(RankedFamily(u, Hi)) and not is_principal(RankedFamily(u, Hi))
        for _, _, Hi in built
    ]
    transcript.append(
        f"{len(comps)} components of sizes {[c.bit_count() for c in comps]}; "
        f"admissible {admissible}; in M {in_M}"
    )
    if not all(in_M):
        # components of an admissible but non-closed A need not be admissible
        transcript.append("not every component family lies in M")
    qualifying = [
        i for i, (Ai, Ji, _) in enumerate(built) if (xb & view.lift_lower(Ai)).bit_count() >= (xb & Ji).bit_count()
    ]
    for i in [*(j for j in qualifying if j > 0 and in_M[j]), *(j for j in qualifying if j == 0 and in_M[j])]:
        Ai, Ji, Hi = built[i]
        delta = lg.delta(Ai)
        q = q_for(Hi, Ai)
        checks["chosen_in_M"] = True
        transcript.append(f"component {i} has |X & A_i| >= |X & J_i|, delta={delta}, Q {'holds' if q else 'fails'}")
        return FailureWitness(H, x, A, J, xa, xj, False, comps, "component", Hi, Ai, delta, q, checks, transcript)
    A1, J1, H1 = built[0]
    gain = (xb & H1).bit_count() - (xb & H).bit_count()
    transcript.append(f"no component family in M qualifies; |X & H_1| - |X & H| = {gain}")
    checks["contradiction"] = gain > 0 and in_M[0]
    return FailureWitness(H, x, A, J, xa, xj, False, comps, "contradiction", H1, A1, lg.delta(A1), False, checks, transcript)
