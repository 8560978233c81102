"""Width of random subsets of the cube against the middle-layer count.

For each p, samples X from 2^[n] and reports how often w(X) equals the
largest layer of X, and how often both shadow events hold.
"""

from ekrcheck.sperner import check_shadow_events, check_wwXX, sample_cube, width


def main(n: int = 6, trials: int = 60) -> None:
    print(f"n = {n}, {trials} samples per p\n")
    print("   p    w = layer max   shadow events   both")
    for p in (0.5, 0.7, 0.85, 0.95, 0.99):
        eq = events = both = 0
        for t in range(trials):
            X = sample_cube(n, p, seed=3, trial=t)
            sperner = check_wwXX(X)
            held = check_shadow_events(X).holds
            eq += sperner
            events += held
            both += sperner and held
        print(f"{p:5.2f}  {eq:14d}  {events:14d}  {both:5d}")
    print(f"\nfull cube width: {width(sample_cube(n, 1.0, 0)).width}")


if __name__ == "__main__":
    main()
