"""Distribution of the dispersiveness C of random local circuits.

Prints quantiles of C and the fraction of circuits with C < 1 next to the
``2^(1 - n/2)`` tail bound, for a range of qubit counts.
"""

import argparse

import numpy as np

from tdesign.circuits import dispersiveness_tail_experiment
from tdesign.linalg import RandomSource


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, nargs="+", default=[4, 6, 8])
    ap.add_argument("--length", type=int, default=200)
    ap.add_argument("--trials", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    for n in args.n:
        exp = dispersiveness_tail_experiment(n, args.length, args.trials, RandomSource(args.seed).substream(n))
        q = exp.quantiles()
        qs = "  ".join(f"q{k}={v:.3f}" for k, v in q.items())
        frac = exp.fraction_below(1.0)
        print(f"n={n:2d}  mean C={np.mean(exp.c_values):.3f}  {qs}  P[C<1]={frac:.3f}  bound={2 ** (1 - n / 2):.3f}")


if __name__ == "__main__":
    main()
