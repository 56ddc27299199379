"""Decoder failure counts broken down by error weight, for codes of several sizes.

Shows whether failures at a fixed error rate come from small constant-size
patterns (whose count grows with n) or from heavy errors.

    python3 scripts/failure_weights.py --sizes 20x15 36x27 --p 0.003 --trials 3000
"""

import argparse
import sys
from collections import Counter

from qexpander import bits
from qexpander.hgp import build_code
from qexpander.noise import stream_rng
from qexpander.ssf import DecoderParams, build_flip_catalog, decode_ssf


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", nargs="+", default=["20x15", "36x27"])
    ap.add_argument("--p", type=float, default=0.003)
    ap.add_argument("--trials", type=int, default=3000)
    ap.add_argument("--seed", type=int, default=2)
    ap.add_argument("--side", choices=("X", "Z"), default="X")
    a = ap.parse_args(argv)
    params = DecoderParams()
    for size in a.sizes:
        n_a, n_b = (int(x) for x in size.split("x"))
        code = build_code(n_a, n_b, 3, 4, 0, no_4cycles=True)
        cat = build_flip_catalog(code, a.side)
        seen, failed = Counter(), Counter()
        for i in range(a.trials):
            e = bits.from_bool_array(stream_rng(a.seed, i, "weights").random(code.n) < a.p)
            run = decode_ssf(cat, cat.side.syndrome(e), params)
            w = e.bit_count()
            seen[w] += 1
            failed[w] += not (run.converged and cat.side.equivalent(e, run.e_hat))
        print(f"n={code.n}")
        print("  weight  errors  failures  fraction")
        for w in sorted(seen):
            print(f"  {w:6d}  {seen[w]:6d}  {failed[w]:8d}  {failed[w] / seen[w]:.4f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
