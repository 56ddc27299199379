"""Survival of the tree branching process against its fixed point, over a grid of p.

    python3 scripts/branching.py --d 3 --ell 2 --p 0.2 0.25 0.3 0.4 --lineages 100000
"""

import argparse
import sys

from qexpander.percolation import simulate_survival, survival_probability
from qexpander.stats import wilson_interval


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--d", type=int, default=3)
    ap.add_argument("--ell", type=int, default=2)
    ap.add_argument("--p", type=float, nargs="+", default=[0.2, 0.25, 0.3, 0.4, 0.5])
    ap.add_argument("--lineages", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=0)
    a = ap.parse_args(argv)
    m = (a.d - 1) ** a.ell
    print("p,analytic,simulated,ci_low,ci_high")
    for p in a.p:
        hits, n = simulate_survival(m, p, a.lineages, a.seed)
        lo, hi = wilson_interval(hits, n, 0.99)
        print(f"{p},{survival_probability(m, p):.6f},{hits / n:.6f},{lo:.6f},{hi:.6f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
