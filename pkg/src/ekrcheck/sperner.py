"""Antichains in a random subset of the Boolean lattice.

``X`` is a subset of ``2^[n]`` (each set a bitmask, ``X`` itself a bitset
over masks).  The width of ``X`` comes from Dilworth's theorem: the minimum
chain cover has ``|X| - nu`` chains, where ``nu`` is a maximum matching in
the bipartite graph of strict inclusions, and Konig's theorem turns the
same matching into a maximum antichain.

The shadow events compare ``|X & up(A)|`` with ``|X & A|`` over closed sets
``A`` of a level.  Below the middle every nonempty ``A`` is covered by its
closure, so the event reduces to Hall's condition with surplus one on the
graph ``X`` induces between consecutive levels, plus the requirement that
each set of the level has an upper neighbour in ``X``.  At the middle level
of odd ``n`` the size cap on the closure is handled by a small integer
program.  Lower shadows are treated by complementing every set, which swaps
levels ``i`` and ``n - i``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from .cliques import maximum_cliques
from .combinat import binom, iter_bits, layer_index, layer_masks

__all__ = [
    "CUBE_LIMIT",
    "WIDTH_LIMIT",
    "ORACLE_LIMIT",
    "CubeSample",
    "sample_cube",
    "cube_from_sets",
    "WidthResult",
    "width",
    "width_bruteforce",
    "is_antichain",
    "check_wwXX",
    "LevelPair",
    "level_pair",
    "ShadowCheck",
    "ShadowReport",
    "check_shadow_events",
    "shadow_events_bruteforce",
    "Replay",
    "replay_antichain",
]

CUBE_LIMIT = 20
WIDTH_LIMIT = 5000
ORACLE_LIMIT = 40


@dataclass(frozen=True)
class CubeSample:
    n: int
    subsets: int
    p: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0 <= self.n <= CUBE_LIMIT:
            raise ValueError(f"n must lie in [0, {CUBE_LIMIT}]")

    def members(self) -> list[int]:
        return list(iter_bits(self.subsets))

    def __len__(self) -> int:
        return self.subsets.bit_count()

    def __contains__(self, mask: int) -> bool:
        return bool(self.subsets >> mask & 1)

    def level(self, i: int) -> list[int]:
        return [m for m in layer_masks(self.n, i) if self.subsets >> m & 1] if 0 <= i <= self.n else []

    def complement(self) -> CubeSample:
        full = (1 << self.n) - 1
        bits = sum(1 << (full ^ m) for m in iter_bits(self.subsets))
        return CubeSample(self.n, bits, self.p, self.seed)


def sample_cube(n: int, p: float, seed: int, trial: int = 0) -> CubeSample:
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    if not 0 <= n <= CUBE_LIMIT:
        raise ValueError(f"n must lie in [0, {CUBE_LIMIT}]")
    size = 1 << n
    bg = np.random.Philox(key=seed)
    if trial:
        bg.advance(trial * -(-size // 4))
    keep = np.random.Generator(bg).random(size) < p
    bits = int.from_bytes(np.packbits(keep, bitorder="little").tobytes(), "little")
    return CubeSample(n, bits, p, seed)


def cube_from_sets(n: int, sets) -> CubeSample:
    bits = 0
    for s in sets:
        mask = s if isinstance(s, int) else sum(1 << (e - 1) for e in s)
        if mask >> n:
            raise ValueError("set outside the ground set")
        bits |= 1 << mask
    return CubeSample(n, bits)


# width


@dataclass(frozen=True)
class WidthResult:
    width: int
    antichain: tuple[int, ...]
    chains: tuple[tuple[int, ...], ...]
    layer_max: int

    @property
    def certified(self) -> bool:
        return len(self.antichain) == len(self.chains) == self.width


def is_antichain(masks) -> bool:
    ms = list(masks)
    for i, a in enumerate(ms):
        for b in ms[i + 1 :]:
            if a & b in (a, b):
                return False
    return True


def _layer_max(X: CubeSample) -> int:
    return max(len(X.level(X.n // 2)), len(X.level(-(-X.n // 2))))


def width(X: CubeSample) -> WidthResult:
    """Width with a maximum antichain and a chain cover of the same size."""
    elems = np.array(sorted(X.members(), key=lambda m: (m.bit_count(), m)), dtype=np.int64)
    size = len(elems)
    if size > WIDTH_LIMIT:
        raise ValueError(f"width limited to |X| <= {WIDTH_LIMIT}, got {size}")
    if size == 0:
        return WidthResult(0, (), (), 0)
    # edge i -> j when elems[i] is a proper subset of elems[j]
    sub = (elems[:, None] & elems[None, :]) == elems[:, None]
    np.fill_diagonal(sub, False)
    graph = csr_matrix(sub.astype(np.int8))
    match = maximum_bipartite_matching(graph, perm_type="column")
    nxt = {i: int(j) for i, j in enumerate(match) if j >= 0}
    has_prev = set(nxt.values())
    chains = []
    for i in range(size):
        if i in has_prev:
            continue
        chain = [int(elems[i])]
        while i in nxt:
            i = nxt[i]
            chain.append(int(elems[i]))
        chains.append(tuple(chain))
    # Konig: alternate from unmatched left vertices
    rows, cols = graph.indptr, graph.indices
    mate_of_right = {j: i for i, j in nxt.items()}
    seen_left = {i for i in range(size) if i not in nxt}
    seen_right: set[int] = set()
    queue = deque(seen_left)
    while queue:
        i = queue.popleft()
        for j in cols[rows[i] : rows[i + 1]]:
            j = int(j)
            if j in seen_right:
                continue
            seen_right.add(j)
            back = mate_of_right.get(j)
            if back is not None and back not in seen_left:
                seen_left.add(back)
                queue.append(back)
    antichain = tuple(int(elems[i]) for i in range(size) if i in seen_left and i not in seen_right)
    return WidthResult(len(chains), antichain, tuple(chains), _layer_max(X))


def width_bruteforce(X: CubeSample) -> int:
    """Largest antichain by clique search on the incomparability graph."""
    elems = X.members()
    if len(elems) > ORACLE_LIMIT:
        raise ValueError(f"oracle limited to |X| <= {ORACLE_LIMIT}")
    adj = []
    for a in elems:
        bits = 0
        for j, b in enumerate(elems):
            if a & b not in (a, b):
                bits |= 1 << j
        adj.append(bits)
    return maximum_cliques(adj)[0]


def check_wwXX(X: CubeSample) -> bool:
    res = width(X)
    return res.width == res.layer_max


# consecutive levels of the cube


class LevelPair:
    """Containment bigraph between levels ``i`` and ``i+1`` of ``2^[n]``."""

    def __init__(self, n: int, i: int) -> None:
        if not 0 <= i < n:
            raise ValueError(f"need 0 <= i < n, got i={i}, n={n}")
        self.n, self.i = n, i
        self.lower_masks = layer_masks(n, i)
        self.upper_masks = layer_masks(n, i + 1)
        uidx = layer_index(n, i + 1)
        self.up = []
        for m in self.lower_masks:
            self.up.append(sum(1 << uidx[m | 1 << e] for e in range(n) if not m >> e & 1))
        down = [0] * len(self.upper_masks)
        for r, nb in enumerate(self.up):
            for s in iter_bits(nb):
                down[s] |= 1 << r
        self.down = down

    def shadow(self, A: int) -> int:
        out = 0
        for r in iter_bits(A):
            out |= self.up[r]
        return out

    def closure(self, A: int) -> int:
        G = self.shadow(A)
        return sum(1 << r for r, nb in enumerate(self.up) if nb & ~G == 0)


@lru_cache(maxsize=None)
def level_pair(n: int, i: int) -> LevelPair:
    return LevelPair(n, i)


def _to_ranks(X: CubeSample, masks: tuple[int, ...]) -> int:
    return sum(1 << r for r, m in enumerate(masks) if X.subsets >> m & 1)


@dataclass(frozen=True)
class ShadowCheck:
    event: str  # "X1" or "X2"
    level: int
    capped: bool
    holds: bool
    witness: tuple[int, ...] = ()  # a violating closed set, as masks at ``level``


@dataclass
class ShadowReport:
    n: int
    checks: list[ShadowCheck] = field(default_factory=list)

    @property
    def holds(self) -> bool:
        return all(c.holds for c in self.checks)

    @property
    def violations(self) -> list[ShadowCheck]:
        return [c for c in self.checks if not c.holds]


def _surplus_check(X: CubeSample, lp: LevelPair) -> tuple[bool, int]:
    """Unconstrained level: returns (holds, violating lower set as ranks)."""
    xl = _to_ranks(X, lp.lower_masks)
    xu = _to_ranks(X, lp.upper_masks)
    for r, nb in enumerate(lp.up):
        if nb & xu == 0:
            return False, 1 << r
    left = list(iter_bits(xl))
    if not left:
        return True, 0
    right = list(iter_bits(xu))
    col = {s: j for j, s in enumerate(right)}
    adj = [[col[s] for s in iter_bits(lp.up[r] & xu)] for r in left]
    indptr = np.cumsum([0] + [len(a) for a in adj])
    indices = np.array([j for a in adj for j in a], dtype=np.int32)
    graph = csr_matrix((np.ones(len(indices), dtype=np.int8), indices, indptr), shape=(len(left), len(right)))
    match = maximum_bipartite_matching(graph, perm_type="column")
    if np.any(match < 0):
        # plain Hall failure: grow a deficient set from an unmatched vertex
        start = int(np.flatnonzero(match < 0)[0])
        return False, _deficient_set(left, adj, match, start, len(right))
    mate = {int(j): i for i, j in enumerate(match)}
    good = {j for j in range(len(right)) if j not in mate}
    queue = deque(good)
    # j is good when an alternating path from j ends at a free vertex
    radj: list[list[int]] = [[] for _ in right]
    for i, a in enumerate(adj):
        for j in a:
            radj[j].append(i)
    while queue:
        j = queue.popleft()
        for i in radj[j]:
            m = int(match[i])
            if m not in good:
                good.add(m)
                queue.append(m)
    for i, a in enumerate(adj):
        if not any(j in good for j in a):
            return False, _deficient_set(left, adj, match, i, len(right))
    return True, 0


def _deficient_set(left: list[int], adj: list[list[int]], match: np.ndarray, start: int, nright: int) -> int:
    mate = {int(j): i for i, j in enumerate(match) if j >= 0}
    S = {start}
    seen: set[int] = set()
    queue = deque([start])
    while queue:
        i = queue.popleft()
        for j in adj[i]:
            if j in seen:
                continue
            seen.add(j)
            back = mate.get(j)
            if back is not None and back not in S:
                S.add(back)
                queue.append(back)
    return sum(1 << left[i] for i in S)


@lru_cache(maxsize=None)
def _capped_constraints(n: int, i: int, cap: int) -> LinearConstraint:
    """Rows forcing ``a`` to be a closed set of size in ``[1, cap]`` and ``b`` its shadow."""
    lp = level_pair(n, i)
    L = len(lp.lower_masks)
    rows, cols, vals, lo, hi = [], [], [], [], []

    def add(entries, low, high):
        row = len(lo)
        for col, val in entries:
            rows.append(row), cols.append(col), vals.append(val)
        lo.append(low), hi.append(high)

    for r, nb in enumerate(lp.up):
        for s in iter_bits(nb):
            add([(L + s, 1), (r, -1)], 0, np.inf)
        add([(r, 1)] + [(L + s, -1) for s in iter_bits(nb)], 1 - nb.bit_count(), np.inf)
    for s, nb in enumerate(lp.down):
        add([(L + s, 1)] + [(r, -1) for r in iter_bits(nb)], -np.inf, 0)
    add([(r, 1) for r in range(L)], 1, cap)
    matrix = csr_matrix((vals, (rows, cols)), shape=(len(lo), L + len(lp.down)))
    return LinearConstraint(matrix, lo, hi)


def _capped_min(X: CubeSample, lp: LevelPair, cap: int) -> tuple[int, int]:
    """Minimum of ``|X & up(A)| - |X & A|`` over closed ``A`` with ``1 <= |A| <= cap``."""
    L, U = len(lp.lower_masks), len(lp.upper_masks)
    xl = _to_ranks(X, lp.lower_masks)
    xu = _to_ranks(X, lp.upper_masks)
    c = np.concatenate(
        [-np.array([xl >> r & 1 for r in range(L)], float), np.array([xu >> s & 1 for s in range(U)], float)]
    )
    res = milp(
        c,
        constraints=_capped_constraints(lp.n, lp.i, cap),
        integrality=np.ones(L + U),
        bounds=Bounds(0, 1),
    )
    if not res.success:
        raise RuntimeError(f"integer program failed: {res.message}")
    return round(res.fun), sum(1 << r for r in range(L) if res.x[r] > 0.5)


@lru_cache(maxsize=None)
def _min_expansion(n: int, i: int, cap: int) -> int:
    return _capped_min(CubeSample(n, (1 << (1 << n)) - 1), level_pair(n, i), cap)[0]


def _capped_check(X: CubeSample, lp: LevelPair, cap: int) -> tuple[bool, int]:
    # |X & up(A)| - |X & A| >= (|up(A)| - |A|) - (sets of the upper level missing from X)
    missing = len(lp.upper_masks) - _to_ranks(X, lp.upper_masks).bit_count()
    if _min_expansion(lp.n, lp.i, cap) > missing:
        return True, 0
    value, A = _capped_min(X, lp, cap)
    return (True, 0) if value > 0 else (False, A)


def _regimes(n: int):
    """Yield (event, level, lower level of the pair, cap or None)."""
    half = binom(n, n // 2) // 2
    for i in range(n // 2):
        yield "X1", i, i, None
    # a zero cap (n = 1) leaves no nonempty set to test
    if n % 2 and half:
        yield "X1", n // 2, n // 2, half
    for i in range(-(-n // 2) + 1, n + 1):
        yield "X2", i, n - i, None
    if n % 2 and half:
        yield "X2", n // 2 + 1, n // 2, half


def check_shadow_events(X: CubeSample) -> ShadowReport:
    """Evaluate both shadow events over every closed set of every regime level."""
    n = X.n
    report = ShadowReport(n)
    Xc = X.complement()
    full = (1 << n) - 1
    for event, level, low, cap in _regimes(n):
        Y = X if event == "X1" else Xc
        lp = level_pair(n, low)
        if cap is None:
            ok, A = _surplus_check(Y, lp)
        else:
            ok, A = _capped_check(Y, lp, cap)
        masks = tuple(lp.lower_masks[r] for r in iter_bits(lp.closure(A))) if A else ()
        if event == "X2":
            masks = tuple(full ^ m for m in masks)
        report.checks.append(ShadowCheck(event, level, cap is not None, ok, masks))
    return report


def shadow_events_bruteforce(X: CubeSample, max_level_size: int = 20) -> ShadowReport:
    """Same report by listing every closed subset of each level (small n only)."""
    n = X.n
    report = ShadowReport(n)
    Xc = X.complement()
    full = (1 << n) - 1
    for event, level, low, cap in _regimes(n):
        Y = X if event == "X1" else Xc
        lp = level_pair(n, low)
        L = len(lp.lower_masks)
        if L > max_level_size:
            raise ValueError(f"level of size {L} too large to enumerate")
        xl = _to_ranks(Y, lp.lower_masks)
        xu = _to_ranks(Y, lp.upper_masks)
        witness = ()
        for A in range(1, 1 << L):
            if cap is not None and A.bit_count() > cap:
                continue
            if lp.closure(A) != A:
                continue
            if (lp.shadow(A) & xu).bit_count() <= (A & xl).bit_count():
                witness = tuple(lp.lower_masks[r] for r in iter_bits(A))
                break
        if event == "X2":
            witness = tuple(full ^ m for m in witness)
        report.checks.append(ShadowCheck(event, level, cap is not None, not witness, witness))
    return report


# replaying the deduction of the width identity


@dataclass
class Replay:
    """Outcome of pushing a maximum antichain towards the middle levels.

    ``outcome`` is ``"middle"`` when the antichain already sits in one middle
    level, ``"two-levels"`` when it straddles both middle levels of odd n and
    the closure argument was checked, and ``"improved"`` when a strictly
    larger antichain was produced (impossible when both shadow events hold).
    """

    outcome: str
    steps: list[str]
    antichain: tuple[int, ...]


def _up_in_X(X: CubeSample, masks) -> set[int]:
    out = set()
    for m in masks:
        for e in range(X.n):
            if not m >> e & 1 and X.subsets >> (m | 1 << e) & 1:
                out.add(m | 1 << e)
    return out


def replay_antichain(X: CubeSample, antichain) -> Replay:
    n = X.n
    anti = set(antichain)
    if not is_antichain(anti) or any(m not in X for m in anti):
        raise ValueError("not an antichain of X")
    steps: list[str] = []
    levels = sorted({m.bit_count() for m in anti})
    lo_mid, hi_mid = n // 2, -(-n // 2)
    size = len(anti)
    if levels and levels[0] < lo_mid:
        i = levels[0]
        Ai = {m for m in anti if m.bit_count() == i}
        new = (anti - Ai) | _up_in_X(X, Ai)
        steps.append(f"level {i}: replaced {len(Ai)} sets by {len(new) - len(anti - Ai)} in the upper shadow")
        if len(new) > size and is_antichain(new):
            return Replay("improved", steps, tuple(sorted(new)))
    if levels and levels[-1] > hi_mid:
        i = levels[-1]
        Bi = {m for m in anti if m.bit_count() == i}
        down = {m & ~(1 << e) for m in Bi for e in range(n) if m >> e & 1 and (m & ~(1 << e)) in X}
        new = (anti - Bi) | down
        steps.append(f"level {i}: replaced {len(Bi)} sets by {len(down)} in the lower shadow")
        if len(new) > size and is_antichain(new):
            return Replay("improved", steps, tuple(sorted(new)))
    if len(levels) <= 1:
        return Replay("middle", steps, tuple(sorted(anti)))
    if n % 2 == 0 or levels != [lo_mid, hi_mid]:
        steps.append(f"antichain on levels {levels} could not be pushed to the middle")
        return Replay("stuck", steps, tuple(sorted(anti)))
    k = lo_mid
    lp = level_pair(n, k)
    lidx, uidx = layer_index(n, k), layer_index(n, k + 1)
    A = sum(1 << lidx[m] for m in anti if m.bit_count() == k)
    B = sum(1 << uidx[m] for m in anti if m.bit_count() == k + 1)
    Abar = lp.closure(A)
    lower_of_B = 0
    for s in iter_bits(B):
        lower_of_B |= lp.down[s]
    Bbar = sum(1 << s for s, nb in enumerate(lp.down) if nb & ~lower_of_B == 0)
    union = [lp.lower_masks[r] for r in iter_bits(Abar)] + [lp.upper_masks[s] for s in iter_bits(Bbar)]
    ok = is_antichain(union)
    half = binom(n, k) // 2
    steps.append(f"closures of sizes {Abar.bit_count()} and {Bbar.bit_count()}, union antichain: {ok}")
    if not ok or min(Abar.bit_count(), Bbar.bit_count()) > half:
        steps.append("closure argument broken")
        return Replay("stuck", steps, tuple(sorted(anti)))
    if Abar.bit_count() <= Bbar.bit_count():
        part = [lp.lower_masks[r] for r in iter_bits(A)]
        new = (anti - set(part)) | _up_in_X(X, part)
    else:
        part = [lp.upper_masks[s] for s in iter_bits(B)]
        down = {m & ~(1 << e) for m in part for e in range(n) if m >> e & 1 and (m & ~(1 << e)) in X}
        new = (anti - set(part)) | down
    steps.append(f"replacing the smaller-closure side gives {len(new)} sets against {size}")
    if len(new) > size and is_antichain(new):
        return Replay("improved", steps, tuple(sorted(new)))
    return Replay("two-levels", steps, tuple(sorted(anti)))
