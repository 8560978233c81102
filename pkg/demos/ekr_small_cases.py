"""Strong EKR at n = 2k+1 for k = 2 and 3.

Lists the nonprincipal maximal intersecting families, then compares a Monte
Carlo estimate of Pr(strong EKR) with the exact value at (5,2).
"""

from collections import Counter

import numpy as np

from ekrcheck.combinat import RankedFamily, Universe
from ekrcheck.ekr import ekr_context, verdict_batch, verdict_oracle
from ekrcheck.families import enumerate_M
from ekrcheck.randmodel import SampleX, exact_prob, mc_estimate_batch


def main() -> None:
    for n, k in [(5, 2), (7, 3)]:
        u = Universe(n, k)
        sizes = Counter(len(F) for F in enumerate_M(u))
        print(f"({n},{k}): |M| = {sum(sizes.values())}, sizes {dict(sorted(sizes.items()))}")

    u = Universe(5, 2)
    ctx = ekr_context(u)
    table = np.array([verdict_oracle(SampleX(RankedFamily(u, c), 0.5, 0)).strong for c in range(1 << u.size)])
    weights = 1 << np.arange(u.size)
    print("\n   p     exact      MC (95% Wilson)")
    for p in (0.5, 0.7, 0.9, 0.99):
        exact = exact_prob(None, u, p, batch=lambda rows: table[rows.astype(np.int64) @ weights])
        mc = mc_estimate_batch(lambda rows: verdict_batch(rows, ctx)[0], u, p, 20_000, seed=1)
        print(f"{p:5.2f}  {exact:.6f}  {mc.estimate:.4f} [{mc.lo:.4f}, {mc.hi:.4f}]")


if __name__ == "__main__":
    main()
