"""Second eigenvalue of the t=2 moment operator versus n, with the circuit length it implies.

For a target accuracy ``eps`` the moment operator of a length-k circuit is
within ``eps`` of the Haar projector once ``lambda2^k <= eps``.
"""

import argparse
import math

from tdesign.moments import lambda2_moment


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--t", type=int, default=2)
    ap.add_argument("--nmax", type=int, default=5)
    ap.add_argument("--eps", type=float, default=1e-3)
    args = ap.parse_args()

    print(f"{'model':8s} {'n':>2s} {'lambda2':>14s} {'bound':>10s} {'k(eps)':>8s} {'bound k':>8s}")
    for model in ("local", "uniform"):
        for n in range(3, args.nmax + 1):
            if model == "uniform" and n > 4:
                break
            cert = lambda2_moment(args.t, n, model)
            lam = cert.lambda2
            bound = 1 - 1 / (5 * n) if model == "local" else 1 - 1 / (5 * n * n)
            steps = math.ceil(math.log(args.eps) / math.log(lam)) if lam > 0 else 1
            bound_steps = math.ceil(math.log(args.eps) / math.log(bound))
            print(f"{model:8s} {n:2d} {lam:14.10f} {bound:10.6f} {steps:8d} {bound_steps:8d}  ({cert.boundary}, {cert.method})")


if __name__ == "__main__":
    main()
