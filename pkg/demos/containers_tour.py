"""Container records for closed 2-linked sets of the middle layers over [8].

Draws a few closed 2-linked sets, builds a record (T, F, U) for each, prints
the compressed sizes next to |A|, and checks that the record reconstructs A.
"""

import numpy as np

from ekrcheck.containers import build_record, check_record
from ekrcheck.layergraph import layer_graph


def closed_linked_sets(lg, count: int, seed: int):
    gen = np.random.default_rng(seed)
    found = 0
    while found < count:
        size = int(gen.integers(1, lg.N // 4))
        A = lg.closure(sum(1 << int(r) for r in gen.choice(lg.N, size=size, replace=False)))
        block = lg.closure(lg.linked_components(A).blocks[0])
        if lg.is_linked(block):
            found += 1
            yield block


def main() -> None:
    lg = layer_graph(4)
    print(f"k = 4: {lg.N} lower vertices\n")
    print("  |A|  delta     |T|  |F|  |U|  |S'|  all checks")
    for i, A in enumerate(closed_linked_sets(lg, 12, seed=7)):
        rec = build_record(lg, A, seed=i)
        checks = check_record(lg, rec)
        print(
            f"{A.bit_count():5d}  {float(lg.delta(A)):6.3f}  {rec.T.bit_count():5d}  {len(rec.F):3d}"
            f"  {rec.U.bit_count():3d}  {rec.Sprime.bit_count():4d}  {all(checks.values())}"
        )


if __name__ == "__main__":
    main()
