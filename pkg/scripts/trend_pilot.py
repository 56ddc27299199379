"""Failure rate of (3, 4) hypergraph-product codes at several sizes and error rates.

Used to pick the operating point of the size-trend check: the smaller code's
rate should be measurable at 10^4 trials.

    python3 scripts/trend_pilot.py --sizes 16x12 20x15 36x27 --p 0.001 0.003 0.01 --trials 2000
"""

import argparse
import sys
from pathlib import Path

from qexpander.experiment import ExperimentConfig, ResultWriter, run_experiment


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", nargs="+", default=["20x15", "36x27"], help="n_A x n_B seed sizes")
    ap.add_argument("--p", type=float, nargs="+", default=[0.001, 0.003, 0.01])
    ap.add_argument("--trials", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--graph-seed", type=int, default=0)
    ap.add_argument("--allow-4cycles", action="store_true")
    ap.add_argument("--mode", choices=("alg1", "alg2"), default="alg2")
    ap.add_argument("--beta", default="1/4")
    ap.add_argument("--threads", type=int, default=3)
    ap.add_argument("--out", default="results/trend_pilot.csv")
    a = ap.parse_args(argv)
    writer = ResultWriter(Path(a.out))
    for size in a.sizes:
        n_a, n_b = (int(x) for x in size.split("x"))
        cfg = ExperimentConfig.from_json({
            "seed": a.seed, "beta": a.beta, "mode": a.mode, "p_grid": a.p, "trials": a.trials, "threads": a.threads,
            "code": {"n_a": n_a, "n_b": n_b, "d_a": 3, "d_b": 4, "seed": a.graph_seed,
                     "no_4cycles": not a.allow_4cycles},
        })
        for row, wall in run_experiment(cfg):
            writer.write(row)
            print(f"n={row.n:5d} k={row.k:3d} p={row.p:<7g} rate={row.rate:.4f} "
                  f"CI95=({row.ci_low:.4f},{row.ci_high:.4f}) {wall:.1f}s", flush=True)
    writer.close()
    return 0


if __name__ == "__main__":
    sys.exit(main())
